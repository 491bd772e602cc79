#![no_main]

use libfuzzer_sys::fuzz_target;
use tripanel::config::{apply_policy, Config, POLICY_KEYS};
use tripanel::EvalPolicy;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = Config::parse(text) else { return };
    assert!(cfg.len() <= text.lines().count());
    for k in cfg.keys() {
        assert!(cfg.get(k).is_some());
    }
    let _ = cfg.check_keys(&POLICY_KEYS);
    let _ = cfg.positive("zM");
    let _ = cfg.parsed::<usize>("samples");
    if let Ok(p) = apply_policy(&cfg, EvalPolicy::default()) {
        let _ = p.validate();
    }
});
