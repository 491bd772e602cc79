//! Per-evaluation cost of the closed form against the point-source and
//! product-quadrature approximations.

use crate::kernel::{self, KernelInputs};
use crate::quadrature::{centroid_influence, PanelQuadrature, QuadratureError, QuadratureSpec, Rule};
use crate::vec3::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use std::time::Instant;
use thiserror::Error;

pub const MIN_WARMUP: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("at least {MIN_WARMUP} warm-up evaluations are required")]
    Warmup,
    #[error("evaluation failed during timing: {0}")]
    Eval(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Exact,
    Centroid,
    Product(usize),
}

impl BenchMethod {
    pub fn label(&self) -> String {
        match self {
            BenchMethod::Exact => "exact".into(),
            BenchMethod::Centroid => "centroid".into(),
            BenchMethod::Product(n) => format!("{n}x{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub z_m: f64,
    pub warmup: usize,
    /// Method and number of timed evaluations.
    pub runs: Vec<(BenchMethod, usize)>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            z_m: 1.0,
            warmup: 1000,
            runs: vec![
                (BenchMethod::Exact, 100_000),
                (BenchMethod::Centroid, 100_000),
                (BenchMethod::Product(10), 10_000),
                (BenchMethod::Product(100), 1_000),
                (BenchMethod::Product(500), 100),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: BenchMethod,
    pub evaluations: usize,
    pub mean_ns: f64,
}

/// Points in `[−2, 2]³` at least 0.05 off the panel plane.
pub fn bench_points(seed: u64, count: usize) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let y: f64 = rng.gen_range(0.05..2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Vec3::new(rng.gen_range(-2.0..2.0), y, rng.gen_range(-2.0..2.0))
        })
        .collect()
}

fn time_loop<F: FnMut(Vec3) -> Result<f64, String>>(pts: &[Vec3], warmup: usize, n: usize, mut f: F) -> Result<f64, BenchError> {
    for k in 0..warmup {
        black_box(f(black_box(pts[k % pts.len()])).map_err(BenchError::Eval)?);
    }
    let t = Instant::now();
    let mut acc = 0.0;
    for k in 0..n {
        acc += f(black_box(pts[k % pts.len()])).map_err(BenchError::Eval)?;
    }
    let elapsed = t.elapsed();
    black_box(acc);
    Ok(elapsed.as_nanos() as f64 / n.max(1) as f64)
}

/// Mean potential-evaluation time per method. Quadrature nodes are built
/// once per method outside the timed loop.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<TimingRow>, BenchError> {
    if cfg.warmup < MIN_WARMUP {
        return Err(BenchError::Warmup);
    }
    let pts = bench_points(cfg.seed, 4096);
    let z_m = cfg.z_m;
    cfg.runs
        .iter()
        .map(|&(method, n)| {
            let mean_ns = match method {
                BenchMethod::Exact => time_loop(&pts, cfg.warmup, n, |p| {
                    kernel::potential(&KernelInputs::at(z_m, p)).map_err(|e| e.to_string())
                })?,
                BenchMethod::Centroid => time_loop(&pts, cfg.warmup, n, |p| {
                    centroid_influence(z_m, p).map(|i| i.potential).map_err(|e| e.to_string())
                })?,
                BenchMethod::Product(k) => {
                    let q = PanelQuadrature::new(z_m, QuadratureSpec::square(k, Rule::Midpoint))?;
                    let warm = cfg.warmup.min(MIN_WARMUP.max(n));
                    time_loop(&pts, warm, n, |p| q.potential(p).map_err(|e| e.to_string()))?
                }
            };
            Ok(TimingRow {
                method,
                evaluations: n,
                mean_ns,
            })
        })
        .collect()
}
