//! `tripanel` command-line studies: influence sweeps, far-field error
//! validation, kernel timings and the unit-square plate.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tripanel::config::{apply_policy, parse_far_field, Config, POLICY_KEYS};
use tripanel::csvio::{Cell, TableWriter};
use tripanel::plate::{corner_band, corner_profile, solve_plate, SplitDiagonal, DEFAULT_FIT_WINDOW};
use tripanel::reference::{CAPACITANCE_BENCHMARK, CAPACITANCE_REFERENCES, CORNER_EXPONENT};
use tripanel::sweep::{run_sweep, validation_study, CanonicalLine, GridPlane, SweepSpec, ValidationConfig};
use tripanel::timing::{run_bench, BenchConfig, MIN_WARMUP};
use tripanel::vec3::parse_vec3;
use tripanel::EvalPolicy;

/// Largest plate subdivision accepted for the dense solve.
const MAX_PLATE_N: usize = 48;

#[derive(Parser, Debug)]
#[command(name = "tripanel", version, about = "Exact influence of uniformly charged right-triangular panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Potential and flux of the unit panel along a line or over a grid.
    Influence(InfluenceArgs),
    /// Far-field error of centroid and product quadrature along the far diagonal.
    Validate(ValidateArgs),
    /// Mean evaluation time of the closed form and the quadratures.
    Bench(BenchArgs),
    /// Capacitance and corner charge profile of the unit square plate.
    Plate(PlateArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct PolicyArgs {
    /// `off` or a threshold in longest panel sides.
    #[arg(long)]
    far_field: Option<String>,
    #[arg(long)]
    distance_floor: Option<f64>,
    #[arg(long)]
    special_band: Option<f64>,
    #[arg(long)]
    fallback_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct InfluenceArgs {
    #[arg(long = "zM")]
    z_m: Option<f64>,
    /// Two endpoints, each `x,y,z`.
    #[arg(long, num_args = 2, value_names = ["START", "END"], allow_hyphen_values = true)]
    line: Option<Vec<String>>,
    #[arg(long, value_parser = parse_canonical)]
    canonical: Option<CanonicalLine>,
    #[arg(long, value_parser = parse_plane)]
    grid_plane: Option<GridPlane>,
    /// Grid points per axis.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Points on a line, both ends included.
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long = "zM")]
    z_m: Option<f64>,
    /// Log-spaced distances on each side of the panel.
    #[arg(long)]
    samples_per_side: Option<usize>,
    /// Exit with status 2 if a summary check fails.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long = "zM")]
    z_m: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Main,
    Anti,
}

#[derive(Args, Debug)]
struct PlateArgs {
    /// Subdivisions per side, nondecreasing.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    split: Option<Split>,
    /// Fit window `rmin,rmax` for the corner slope.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    window: Option<Vec<f64>>,
    /// CSV destination for the corner profile of the finest mesh.
    #[arg(long)]
    corner_out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    policy: PolicyArgs,
}

fn parse_canonical(s: &str) -> Result<CanonicalLine, String> {
    s.parse()
        .map_err(|_| format!("expected one of {}", CanonicalLine::ALL.map(|c| c.name()).join(", ")))
}

fn parse_plane(s: &str) -> Result<GridPlane, String> {
    s.parse().map_err(|_| "expected XY, XZ or YZ".to_string())
}

/// Failures that are the caller's fault (exit 1) versus numerical ones (exit 2).
enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn numerical<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Numerical(e.into())
}

fn load_config(path: Option<&Path>, allowed: &[&str]) -> Outcome<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    let cfg = Config::parse(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(usage)?;
    let keys: Vec<&str> = allowed.iter().chain(POLICY_KEYS.iter()).copied().collect();
    cfg.check_keys(&keys)
        .with_context(|| format!("in {}", path.display()))
        .map_err(usage)?;
    Ok(cfg)
}

fn positive(name: &str, v: f64) -> Outcome<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(anyhow!("--{name} must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Outcome<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(usage(anyhow!("--{name} must be at least {min}, got {v}")))
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &Config, key: &str, default: T) -> Outcome<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.parsed(key).map_err(usage)?.unwrap_or(default)),
    }
}

fn policy(cfg: &Config, args: &PolicyArgs) -> Outcome<EvalPolicy> {
    let mut p = apply_policy(cfg, EvalPolicy::default()).map_err(usage)?;
    if let Some(s) = &args.far_field {
        p.far_field = parse_far_field(s).ok_or_else(|| usage(anyhow!("--far-field expects `off` or a positive number, got {s:?}")))?;
    }
    if let Some(v) = args.distance_floor {
        p.distance_floor = positive("distance-floor", v)?;
    }
    if let Some(v) = args.special_band {
        p.special_band = positive("special-band", v)?;
    }
    if let Some(v) = args.fallback_tol {
        p.fallback_tol = positive("fallback-tol", v)?;
    }
    p.validate().map_err(usage)?;
    Ok(p)
}

fn output(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(usage)?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into().context("writing output"))
}

fn cmd_influence(a: &InfluenceArgs) -> Outcome<()> {
    let cfg = load_config(a.common.config.as_deref(), &["zM", "samples", "grid_n"])?;
    let z_m = positive("zM", pick(a.z_m, &cfg, "zM", 1.0)?)?;
    let samples = at_least("samples", pick(a.samples, &cfg, "samples", 401)?, 1)?;
    let grid_n = at_least("grid-n", pick(a.grid_n, &cfg, "grid_n", 101)?, 1)?;
    let pol = policy(&cfg, &a.policy)?;
    let chosen = [a.line.is_some(), a.canonical.is_some(), a.grid_plane.is_some()];
    let spec = match chosen.iter().filter(|&&c| c).count() {
        0 => CanonicalLine::Diagonal.spec(z_m, samples),
        1 => {
            if let Some(ends) = &a.line {
                let parse = |s: &String| parse_vec3(s).ok_or_else(|| usage(anyhow!("--line endpoint {s:?} is not x,y,z")));
                SweepSpec::Line {
                    start: parse(&ends[0])?,
                    end: parse(&ends[1])?,
                    samples,
                }
            } else if let Some(c) = a.canonical {
                c.spec(z_m, samples)
            } else {
                SweepSpec::contour_grid(a.grid_plane.expect("one source chosen"), z_m, grid_n)
            }
        }
        _ => return Err(usage(anyhow!("--line, --canonical and --grid-plane are mutually exclusive"))),
    };
    let points = spec.points().map_err(usage)?;
    let rows = run_sweep(z_m, &points, &pol).map_err(numerical)?;
    let mut w = TableWriter::new(
        output(a.common.out.as_deref())?,
        "influence",
        1,
        &["x", "y", "z", "phi", "fx", "fy", "fz", "path", "flags"],
    )
    .map_err(io_err)?;
    for r in &rows {
        let (p, f) = (r.point, r.result.flux);
        w.row(&[
            p.x.into(),
            p.y.into(),
            p.z.into(),
            r.result.potential.into(),
            f.x.into(),
            f.y.into(),
            f.z.into(),
            r.result.path.name().into(),
            r.result.flag_string().into(),
        ])
        .map_err(io_err)?;
    }
    w.finish().map_err(io_err)?.flush().map_err(io_err)?;
    let special = rows.iter().filter(|r| !r.result.flags.is_empty()).count();
    eprintln!("{} points, {special} flagged", rows.len());
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> Outcome<()> {
    let cfg = load_config(a.common.config.as_deref(), &["zM", "samples_per_side"])?;
    let base = ValidationConfig::default();
    let vc = ValidationConfig {
        z_m: positive("zM", pick(a.z_m, &cfg, "zM", base.z_m)?)?,
        samples_per_side: at_least(
            "samples-per-side",
            pick(a.samples_per_side, &cfg, "samples_per_side", base.samples_per_side)?,
            2,
        )?,
        ..base
    };
    let report = validation_study(&vc).map_err(numerical)?;
    let names: Vec<String> = vc.methods.iter().map(|m| format!("relerr_{m}")).collect();
    let mut cols = vec!["distance", "side", "exact"];
    cols.extend(names.iter().map(String::as_str));
    let mut w = TableWriter::new(output(a.common.out.as_deref())?, "validate", 1, &cols).map_err(io_err)?;
    for r in &report.rows {
        let mut cells: Vec<Cell> = vec![r.distance.into(), Cell::Int(r.side.into()), r.exact.into()];
        cells.extend(r.rel_err.iter().map(|&e| Cell::Float(e)));
        w.row(&cells).map_err(io_err)?;
    }
    w.finish().map_err(io_err)?.flush().map_err(io_err)?;

    let far = 50.0 * (1.0 + vc.z_m * vc.z_m).sqrt();
    let show = |d: Option<f64>| d.map_or("never".to_string(), |d| format!("{d:.3}"));
    let c0 = report.crossing(0, 0.01);
    let c1 = report.crossing(1, 0.01);
    let e_far = report.max_error_beyond(0, far);
    let checks = [
        (
            format!("centroid 1% crossing {} in [10, 40]", show(c0)),
            c0.is_some_and(|d| (10.0..=40.0).contains(&d)),
        ),
        (
            format!("{} 1% crossing {} in [1, 4]", vc.methods[1], show(c1)),
            c1.is_some_and(|d| (1.0..=4.0).contains(&d)),
        ),
        (format!("centroid error beyond {far:.1} units {e_far:.3e} < 1e-5"), e_far < 1e-5),
    ];
    for (k, m) in vc.methods.iter().enumerate().skip(2) {
        eprintln!("{m} 1% crossing {}", show(report.crossing(k, 0.01)));
    }
    let mut ok = true;
    for (msg, pass) in &checks {
        ok &= pass;
        eprintln!("{}: {msg}", if *pass { "PASS" } else { "FAIL" });
    }
    if a.strict && !ok {
        return Err(numerical(anyhow!("far-field checks failed")));
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Outcome<()> {
    let cfg = load_config(a.common.config.as_deref(), &["seed", "warmup", "zM"])?;
    let base = BenchConfig::default();
    let bc = BenchConfig {
        seed: pick(a.seed, &cfg, "seed", base.seed)?,
        warmup: at_least("warmup", pick(a.warmup, &cfg, "warmup", base.warmup)?, MIN_WARMUP)?,
        z_m: positive("zM", pick(a.z_m, &cfg, "zM", base.z_m)?)?,
        ..base
    };
    let rows = run_bench(&bc).map_err(numerical)?;
    let mut w = TableWriter::new(output(a.common.out.as_deref())?, "bench", 1, &["method", "evaluations", "mean_ns"]).map_err(io_err)?;
    for r in &rows {
        w.row(&[r.method.label().into(), r.evaluations.into(), r.mean_ns.into()])
            .map_err(io_err)?;
    }
    w.finish().map_err(io_err)?.flush().map_err(io_err)?;
    for r in &rows {
        eprintln!("{:>10} {:>12.1} ns", r.method.label(), r.mean_ns);
    }
    Ok(())
}

fn cmd_plate(a: &PlateArgs) -> Outcome<()> {
    let cfg = load_config(a.common.config.as_deref(), &["n", "split", "window"])?;
    let ns: Vec<usize> = match &a.n {
        Some(v) => v.clone(),
        None => match cfg.get("n") {
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| usage(anyhow!("config n: expected a comma-separated list, got {s:?}")))?,
            None => vec![4, 8, 16, 32],
        },
    };
    if ns.is_empty() || ns.windows(2).any(|w| w[1] < w[0]) {
        return Err(usage(anyhow!("--n must be a nonempty nondecreasing list")));
    }
    if let Some(&bad) = ns.iter().find(|&&n| n == 0 || n > MAX_PLATE_N) {
        return Err(usage(anyhow!("--n values must be in 1..={MAX_PLATE_N}, got {bad}")));
    }
    let split = match a.split {
        Some(Split::Main) => SplitDiagonal::Main,
        Some(Split::Anti) => SplitDiagonal::Anti,
        None => match cfg.get("split") {
            None | Some("main") => SplitDiagonal::Main,
            Some("anti") => SplitDiagonal::Anti,
            Some(s) => return Err(usage(anyhow!("config split: expected main or anti, got {s:?}"))),
        },
    };
    let window = match &a.window {
        Some(v) if v.len() == 2 => (v[0], v[1]),
        Some(_) => return Err(usage(anyhow!("--window expects rmin,rmax"))),
        None => match cfg.get("window") {
            Some(s) => {
                let v: Vec<f64> = s.split(',').filter_map(|t| t.trim().parse().ok()).collect();
                if v.len() != 2 {
                    return Err(usage(anyhow!("config window: expected rmin,rmax, got {s:?}")));
                }
                (v[0], v[1])
            }
            None => DEFAULT_FIT_WINDOW,
        },
    };
    if !(window.0 > 0.0 && window.1 > window.0 && window.1.is_finite()) {
        return Err(usage(anyhow!("fit window must satisfy 0 < rmin < rmax")));
    }
    let pol = policy(&cfg, &a.policy)?;

    let mut w = TableWriter::new(
        output(a.common.out.as_deref())?,
        "plate",
        1,
        &["n", "elements", "cap_over_4pi_eps0", "residual", "fallback_entries"],
    )
    .map_err(io_err)?;
    let mut reports = Vec::new();
    let mut finest = None;
    for &n in &ns {
        let s = solve_plate(n, split, &pol).map_err(|e| numerical(anyhow!(e).context(format!("plate n={n}"))))?;
        let r = s.report;
        w.row(&[
            r.n.into(),
            r.n_elements.into(),
            r.cap_over_4pi_eps0.into(),
            r.residual_norm.into(),
            s.system.fallback_entries.into(),
        ])
        .map_err(io_err)?;
        reports.push(r);
        finest = Some(s);
    }
    w.finish().map_err(io_err)?.flush().map_err(io_err)?;

    let s = finest.expect("at least one mesh");
    let profile = corner_profile(&s.mesh, &s.sigma, window);
    if let Some(path) = &a.corner_out {
        let band = corner_band(&s.mesh, &s.sigma).map_err(numerical)?;
        let mut cw = TableWriter::new(output(Some(path))?, "corner", 1, &["r", "sigma", "in_window"]).map_err(io_err)?;
        for (r, sig) in band {
            let inside = (window.0..=window.1).contains(&r);
            cw.row(&[r.into(), sig.into(), usize::from(inside).into()]).map_err(io_err)?;
        }
        cw.finish().map_err(io_err)?.flush().map_err(io_err)?;
    }

    eprintln!("{:<44} {:<44} C/4πε0", "source", "method");
    for r in &CAPACITANCE_REFERENCES {
        eprintln!("{:<44} {:<44} {}", r.source, r.method, r.value);
    }
    for r in &reports {
        let dev = 100.0 * (r.cap_over_4pi_eps0 - CAPACITANCE_BENCHMARK) / CAPACITANCE_BENCHMARK;
        eprintln!(
            "{:<44} {:<44} {:.7} ({dev:+.3}%)",
            "this solver",
            format!("{} elements, centroid collocation", r.n_elements),
            r.cap_over_4pi_eps0
        );
    }
    match profile {
        Ok(p) => eprintln!(
            "corner slope n={}: {:.4} over r in [{}, {}] (reference exponent {CORNER_EXPONENT})",
            s.mesh.n, p.fit_slope, p.fit_window.0, p.fit_window.1
        ),
        Err(e) => eprintln!("corner slope unavailable at n={}: {e}", s.mesh.n),
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::Influence(a) => cmd_influence(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Plate(a) => cmd_plate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_line_endpoints_parse() {
        let cli = Cli::try_parse_from(["tripanel", "influence", "--line", "-2,-2,-2", "2,2,2", "--samples", "5"]).unwrap();
        let Command::Influence(a) = cli.command else { panic!() };
        assert_eq!(a.line.unwrap(), vec!["-2,-2,-2".to_string(), "2,2,2".to_string()]);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        assert!(matches!(positive("zM", -1.0), Err(Failure::Usage(_))));
        assert!(matches!(at_least("warmup", 10, 100), Err(Failure::Usage(_))));
        let p = PolicyArgs {
            far_field: Some("soon".into()),
            ..PolicyArgs::default()
        };
        assert!(matches!(policy(&Config::default(), &p), Err(Failure::Usage(_))));
    }
}
