//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored; a key may appear
//! once. Values are kept as text and converted on lookup.

use crate::robust::{EvalPolicy, FarFieldSwitch};
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("line {line}: invalid key {key:?}")]
    BadKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("{key}: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("{key}: must be positive and finite")]
    NotPositive { key: String },
    #[error("unknown key {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (key, value) = s.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(ConfigError::BadKey {
                    line,
                    key: key.to_string(),
                });
            }
            if entries.contains_key(key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            entries.insert(key.to_string(), (line, value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::Value {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    /// A positive finite float, if present.
    pub fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parsed::<f64>(key)? {
            Some(v) if !(v.is_finite() && v > 0.0) => Err(ConfigError::NotPositive { key: key.to_string() }),
            other => Ok(other),
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(ConfigError::Unknown(k.to_string())),
            None => Ok(()),
        }
    }
}

/// Keys read by [`apply_policy`].
pub const POLICY_KEYS: [&str; 4] = ["distance_floor", "special_band", "far_field", "fallback_tol"];

/// Overrides policy fields present in the config. `far_field` is `off` or a
/// threshold in longest sides.
pub fn apply_policy(cfg: &Config, mut policy: EvalPolicy) -> Result<EvalPolicy, ConfigError> {
    if let Some(v) = cfg.positive("distance_floor")? {
        policy.distance_floor = v;
    }
    if let Some(v) = cfg.positive("special_band")? {
        policy.special_band = v;
    }
    if let Some(v) = cfg.positive("fallback_tol")? {
        policy.fallback_tol = v;
    }
    if let Some(v) = cfg.get("far_field") {
        policy.far_field = parse_far_field(v).ok_or_else(|| ConfigError::Value {
            key: "far_field".into(),
            value: v.into(),
        })?;
    }
    Ok(policy)
}

pub fn parse_far_field(v: &str) -> Option<FarFieldSwitch> {
    if v.eq_ignore_ascii_case("off") {
        return Some(FarFieldSwitch::Off);
    }
    let t: f64 = v.parse().ok()?;
    (t.is_finite() && t > 0.0).then_some(FarFieldSwitch::Threshold(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let c = Config::parse("# policy\n\n zm = 10 \nsamples=401\nfar_field = off\n").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.parsed::<f64>("zm").unwrap(), Some(10.0));
        assert_eq!(c.parsed::<usize>("samples").unwrap(), Some(401));
        assert_eq!(c.get("missing"), None);
        assert!(c.check_keys(&["zm", "samples", "far_field"]).is_ok());
        assert_eq!(c.check_keys(&["zm"]), Err(ConfigError::Unknown("far_field".into())));
    }

    #[test]
    fn reports_errors_with_lines() {
        assert_eq!(Config::parse("a=1\nnonsense\n"), Err(ConfigError::Syntax { line: 2 }));
        assert!(matches!(Config::parse("a=1\na=2"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(matches!(Config::parse("a b=1"), Err(ConfigError::BadKey { line: 1, .. })));
        let c = Config::parse("zm = -1\nn = x").unwrap();
        assert!(matches!(c.positive("zm"), Err(ConfigError::NotPositive { .. })));
        assert!(matches!(c.parsed::<usize>("n"), Err(ConfigError::Value { .. })));
    }

    #[test]
    fn policy_overrides() {
        let c = Config::parse("distance_floor=1e-9\nfar_field=20\nfallback_tol=1e-8").unwrap();
        let p = apply_policy(&c, EvalPolicy::default()).unwrap();
        assert_eq!(p.distance_floor, 1e-9);
        assert_eq!(p.far_field, FarFieldSwitch::Threshold(20.0));
        assert_eq!(p.fallback_tol, 1e-8);
        assert_eq!(p.special_band, 1e-6);
        let bad = Config::parse("far_field=sometimes").unwrap();
        assert!(apply_policy(&bad, EvalPolicy::default()).is_err());
    }

    proptest! {
        #[test]
        fn well_formed_files_round_trip(
            kv in proptest::collection::btree_map("[a-z_]{1,8}", "[a-zA-Z0-9.+-]{0,12}", 0..8)
        ) {
            let text: String = kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            let c = Config::parse(&text).unwrap();
            prop_assert_eq!(c.len(), kv.len());
            for (k, v) in &kv {
                prop_assert_eq!(c.get(k), Some(v.as_str()));
            }
        }

        #[test]
        fn arbitrary_text_never_panics(s in "\\PC{0,200}") {
            let _ = Config::parse(&s);
        }
    }
}
