//! Field-point sweeps over a single normalized panel and the far-field
//! error study comparing the closed forms with point-source and product
//! quadrature approximations.

use crate::geometry::TrianglePrimitive;
use crate::quadrature::{centroid_influence, PanelQuadrature, QuadratureError, QuadratureSpec, Rule};
use crate::robust::{influence_local, EvalPolicy, InfluenceResult, RobustError};
use crate::vec3::Vec3;
use crate::GeometryError;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("a sweep needs at least one sample per axis")]
    NoSamples,
    #[error("sweep bounds must be finite")]
    NonFinite,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] RobustError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("unknown name {0:?}")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPlane {
    XY,
    XZ,
    YZ,
}

impl FromStr for GridPlane {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, SweepError> {
        match s.to_ascii_uppercase().as_str() {
            "XY" => Ok(GridPlane::XY),
            "XZ" => Ok(GridPlane::XZ),
            "YZ" => Ok(GridPlane::YZ),
            _ => Err(SweepError::UnknownName(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepSpec {
    /// `samples` equally spaced points including both ends.
    Line { start: Vec3, end: Vec3, samples: usize },
    /// Regular grid over `[lo.0, hi.0] × [lo.1, hi.1]` in the plane's two
    /// axes (in `XYZ` order), with the third coordinate at `offset`.
    Grid {
        plane: GridPlane,
        lo: (f64, f64),
        hi: (f64, f64),
        n: (usize, usize),
        offset: f64,
    },
}

fn axis(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * k as f64 / (n - 1) as f64
    }
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<Vec3>, SweepError> {
        match *self {
            SweepSpec::Line { start, end, samples } => {
                if samples == 0 {
                    return Err(SweepError::NoSamples);
                }
                if !(start.is_finite() && end.is_finite()) {
                    return Err(SweepError::NonFinite);
                }
                Ok((0..samples)
                    .map(|k| {
                        if samples == 1 {
                            start
                        } else {
                            start.lerp(end, k as f64 / (samples - 1) as f64)
                        }
                    })
                    .collect())
            }
            SweepSpec::Grid { plane, lo, hi, n, offset } => {
                if n.0 == 0 || n.1 == 0 {
                    return Err(SweepError::NoSamples);
                }
                if ![lo.0, lo.1, hi.0, hi.1, offset].iter().all(|v| v.is_finite()) {
                    return Err(SweepError::NonFinite);
                }
                let mut out = Vec::with_capacity(n.0 * n.1);
                for a in 0..n.0 {
                    for b in 0..n.1 {
                        let (u, v) = (axis(lo.0, hi.0, n.0, a), axis(lo.1, hi.1, n.1, b));
                        out.push(match plane {
                            GridPlane::XY => Vec3::new(u, v, offset),
                            GridPlane::XZ => Vec3::new(u, offset, v),
                            GridPlane::YZ => Vec3::new(offset, u, v),
                        });
                    }
                }
                Ok(out)
            }
        }
    }

    /// Grid covering the panel with half a leg of margin on each side.
    pub fn contour_grid(plane: GridPlane, z_m: f64, n: usize) -> Self {
        let (xs, zs) = ((-0.5, 1.5), (-0.5 * z_m, 1.5 * z_m));
        let ys = (-0.5 * z_m.max(1.0), 0.5 * z_m.max(1.0));
        let (lo, hi) = match plane {
            GridPlane::XY => ((xs.0, ys.0), (xs.1, ys.1)),
            GridPlane::XZ => ((xs.0, zs.0), (xs.1, zs.1)),
            GridPlane::YZ => ((ys.0, zs.0), (ys.1, zs.1)),
        };
        let offset = match plane {
            GridPlane::XZ => 0.0,
            GridPlane::XY => z_m / 3.0,
            GridPlane::YZ => 1.0 / 3.0,
        };
        SweepSpec::Grid {
            plane,
            lo,
            hi,
            n: (n, n),
            offset,
        }
    }
}

/// Named lines used to compare the closed forms with quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalLine {
    /// `(−2,−2,−2) → (2,2,2)`.
    Diagonal,
    /// In the panel plane, parallel to Z through the centroid, `Z ∈ [−zM, 2zM]`.
    Centroidal,
    /// Direction `(1,1,1)` through the centroid, offsets `±10` per axis.
    Piercing,
    /// `(−1000,−1000,−1000) → (1000,1000,1000)`, through the right-angle corner.
    Far,
}

impl CanonicalLine {
    pub const ALL: [CanonicalLine; 4] = [
        CanonicalLine::Diagonal,
        CanonicalLine::Centroidal,
        CanonicalLine::Piercing,
        CanonicalLine::Far,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CanonicalLine::Diagonal => "diagonal",
            CanonicalLine::Centroidal => "centroidal",
            CanonicalLine::Piercing => "piercing",
            CanonicalLine::Far => "far",
        }
    }

    pub fn spec(self, z_m: f64, samples: usize) -> SweepSpec {
        let c = Vec3::new(1.0 / 3.0, 0.0, z_m / 3.0);
        let (start, end) = match self {
            CanonicalLine::Diagonal => (Vec3::splat(-2.0), Vec3::splat(2.0)),
            CanonicalLine::Centroidal => (Vec3::new(c.x, 0.0, -z_m), Vec3::new(c.x, 0.0, 2.0 * z_m)),
            CanonicalLine::Piercing => (c - Vec3::splat(10.0), c + Vec3::splat(10.0)),
            CanonicalLine::Far => (Vec3::splat(-1000.0), Vec3::splat(1000.0)),
        };
        SweepSpec::Line { start, end, samples }
    }
}

impl fmt::Display for CanonicalLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CanonicalLine {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, SweepError> {
        CanonicalLine::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| SweepError::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec3,
    pub result: InfluenceResult,
}

/// Evaluates the unit source on the normalized triangle at every point, in order.
pub fn run_sweep(z_m: f64, points: &[Vec3], policy: &EvalPolicy) -> Result<Vec<SweepRow>, SweepError> {
    let prim = TrianglePrimitive::new(z_m)?;
    points
        .par_iter()
        .map(|&p| {
            Ok(SweepRow {
                point: p,
                result: influence_local(&prim, p, policy)?,
            })
        })
        .collect()
}

/// Approximations compared against the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Approximation {
    Centroid,
    Product(QuadratureSpec),
}

impl fmt::Display for Approximation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Approximation::Centroid => f.write_str("centroid"),
            Approximation::Product(s) => write!(f, "{}x{}", s.nx, s.nz),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    pub z_m: f64,
    /// Point of the line on the panel; distances are measured from it.
    pub anchor: Vec3,
    /// Largest distance from the anchor along the line.
    pub max_distance: f64,
    pub min_distance: f64,
    /// Log-spaced distances on each side of the anchor.
    pub samples_per_side: usize,
    pub methods: Vec<Approximation>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            z_m: 10.0,
            anchor: Vec3::ZERO,
            max_distance: 1000.0 * 3f64.sqrt(),
            min_distance: 0.05,
            samples_per_side: 241,
            methods: vec![
                Approximation::Centroid,
                Approximation::Product(QuadratureSpec::square(10, Rule::ClippedMidpoint)),
                Approximation::Product(QuadratureSpec::square(100, Rule::ClippedMidpoint)),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    /// Euclidean distance from the anchor.
    pub distance: f64,
    /// `+1` towards `(1,1,1)`, `−1` away from it.
    pub side: i8,
    pub exact: f64,
    /// `|approx − exact| / exact` per method.
    pub rel_err: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub config: ValidationConfig,
    pub rows: Vec<ErrorRow>,
}

/// Potential errors along the line through the anchor in direction `(1,1,1)`.
pub fn validation_study(cfg: &ValidationConfig) -> Result<ValidationReport, SweepError> {
    let prim = TrianglePrimitive::new(cfg.z_m)?;
    if cfg.samples_per_side < 2 || !(cfg.min_distance > 0.0 && cfg.max_distance > cfg.min_distance) {
        return Err(SweepError::NoSamples);
    }
    let quads: Vec<Option<PanelQuadrature>> = cfg
        .methods
        .iter()
        .map(|m| match m {
            Approximation::Centroid => Ok(None),
            Approximation::Product(s) => PanelQuadrature::new(cfg.z_m, *s).map(Some),
        })
        .collect::<Result<_, _>>()?;
    let c = cfg.anchor;
    let dir = Vec3::splat(1.0 / 3f64.sqrt());
    let ratio = (cfg.max_distance / cfg.min_distance).ln();
    let n = cfg.samples_per_side;
    let jobs: Vec<(f64, i8)> = [-1i8, 1]
        .into_iter()
        .flat_map(|side| {
            (0..n).map(move |k| {
                let d = cfg.min_distance * (ratio * k as f64 / (n - 1) as f64).exp();
                (d, side)
            })
        })
        .collect();
    let policy = EvalPolicy::default();
    let rows = jobs
        .par_iter()
        .map(|&(d, side)| {
            let p = c + dir * (d * side as f64);
            let exact = influence_local(&prim, p, &policy)?.potential;
            let rel_err = cfg
                .methods
                .iter()
                .zip(&quads)
                .map(|(m, q)| {
                    let v = match (m, q) {
                        (_, Some(q)) => q.potential(p)?,
                        _ => centroid_influence(cfg.z_m, p)?.potential,
                    };
                    Ok((v - exact).abs() / exact)
                })
                .collect::<Result<Vec<f64>, SweepError>>()?;
            Ok(ErrorRow {
                distance: d,
                side,
                exact,
                rel_err,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    Ok(ValidationReport { config: cfg.clone(), rows })
}

impl ValidationReport {
    /// Distance beyond which method `m` stays below `level` on both sides,
    /// log-interpolated between the bracketing samples. `None` if it never
    /// drops below `level` inside the sampled range.
    pub fn crossing(&self, m: usize, level: f64) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for side in [-1i8, 1] {
            let mut pts: Vec<(f64, f64)> = self
                .rows
                .iter()
                .filter(|r| r.side == side)
                .map(|r| (r.distance, r.rel_err[m]))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let last_bad = pts.iter().rposition(|p| p.1 >= level);
            let d = match last_bad {
                None => pts.first()?.0,
                Some(k) if k + 1 == pts.len() => return None,
                Some(k) => {
                    let (a, b) = (pts[k], pts[k + 1]);
                    let t = (a.1.ln() - level.ln()) / (a.1.ln() - b.1.max(f64::MIN_POSITIVE).ln());
                    (a.0.ln() + t * (b.0.ln() - a.0.ln())).exp()
                }
            };
            worst = worst.max(d);
        }
        Some(worst)
    }

    /// Largest error of method `m` among samples at or beyond `distance`.
    pub fn max_error_beyond(&self, m: usize, distance: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.distance >= distance)
            .map(|r| r.rel_err[m])
            .fold(0.0, f64::max)
    }
}

/// Relative potential error of a method at one distance from the origin, worst side.
pub fn error_at(z_m: f64, method: Approximation, distance: f64) -> Result<f64, SweepError> {
    let cfg = ValidationConfig {
        z_m,
        min_distance: distance,
        max_distance: distance * (1.0 + 1e-12),
        samples_per_side: 2,
        methods: vec![method],
        ..ValidationConfig::default()
    };
    let r = validation_study(&cfg)?;
    Ok(r.rows.iter().map(|r| r.rel_err[0]).fold(0.0, f64::max))
}
