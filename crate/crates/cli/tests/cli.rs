use std::fs::{self, File};
use std::process::{Command, Output};
use tripanel::csvio::{expect_schema, read_table};

fn tripanel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tripanel"))
        .args(args)
        .output()
        .expect("spawn tripanel")
}

const INFLUENCE_COLS: [&str; 9] = ["x", "y", "z", "phi", "fx", "fy", "fz", "path", "flags"];

#[test]
fn influence_line_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("line.csv");
    let o = tripanel(&[
        "influence",
        "--zM",
        "1",
        "--line",
        "-2,-2,-2",
        "2,2,2",
        "--samples",
        "401",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_table(File::open(&out).unwrap()).unwrap();
    expect_schema(&t, "influence", &INFLUENCE_COLS).unwrap();
    assert_eq!(t.rows.len(), 401);
    let phi = t.floats("phi").unwrap();
    assert!(phi.iter().all(|v| v.is_finite() && *v > 0.0));
    // The diagonal passes through the right-angle corner at the middle sample.
    let flags = t.column_index("flags").unwrap();
    assert!(t.rows[200][flags].starts_with("corner-limit"));
    let generic = t
        .rows
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != 200)
        .all(|(_, r)| r[flags].is_empty());
    assert!(generic);
}

#[test]
fn influence_grid_and_canonical_lines() {
    let o = tripanel(&["influence", "--zM", "10", "--grid-plane", "XZ", "--grid-n", "21"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_table(o.stdout.as_slice()).unwrap();
    assert_eq!(t.rows.len(), 21 * 21);
    assert_eq!(t.floats("y").unwrap().iter().filter(|&&y| y != 0.0).count(), 0);

    for name in ["diagonal", "centroidal", "piercing", "far"] {
        let o = tripanel(&["influence", "--canonical", name, "--samples", "51"]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(read_table(o.stdout.as_slice()).unwrap().rows.len(), 51);
    }
}

#[test]
fn output_is_deterministic_and_full_precision() {
    let a = tripanel(&["influence", "--canonical", "piercing", "--samples", "33"]);
    let b = tripanel(&["influence", "--canonical", "piercing", "--samples", "33"]);
    assert_eq!(a.stdout, b.stdout);
    let t = read_table(a.stdout.as_slice()).unwrap();
    let mantissa = t.rows[0][3].split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep\nzM = 2\nsamples = 7\nfar_field = 20\n").unwrap();
    let o = tripanel(&["influence", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_table(o.stdout.as_slice()).unwrap().rows.len(), 7);
    let o = tripanel(&["influence", "--config", cfg.to_str().unwrap(), "--samples", "9"]);
    assert_eq!(read_table(o.stdout.as_slice()).unwrap().rows.len(), 9);

    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = tripanel(&["influence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["influence", "--zM", "-1"],
        vec!["influence", "--zM", "nan"],
        vec!["influence", "--line", "1,2", "3,4,5"],
        vec!["influence", "--canonical", "sideways"],
        vec!["influence", "--canonical", "far", "--grid-plane", "XY"],
        vec!["influence", "--far-field", "1"],
        vec!["bench", "--warmup", "5"],
        vec!["plate", "--n", "8,4"],
        vec!["plate", "--n", "500"],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = tripanel(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(tripanel(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_reports_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("err.csv");
    let o = tripanel(&["validate", "--strict", "--out", out.to_str().unwrap()]);
    let log = String::from_utf8_lossy(&o.stderr);
    assert!(o.status.success(), "{log}");
    let t = read_table(File::open(&out).unwrap()).unwrap();
    expect_schema(
        &t,
        "validate",
        &["distance", "side", "exact", "relerr_centroid", "relerr_10x10", "relerr_100x100"],
    )
    .unwrap();
    assert_eq!(t.rows.len(), 2 * 241);
    assert_eq!(log.matches("PASS").count(), 3, "{log}");
}

#[test]
fn bench_table_has_every_method() {
    let o = tripanel(&["bench", "--seed", "3", "--warmup", "100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_table(o.stdout.as_slice()).unwrap();
    expect_schema(&t, "bench", &["method", "evaluations", "mean_ns"]).unwrap();
    let names: Vec<&str> = t.rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["exact", "centroid", "10x10", "100x100", "500x500"]);
    assert!(t.floats("mean_ns").unwrap().iter().all(|&v| v > 0.0));
}

#[test]
fn plate_sweep_and_corner_profile() {
    let dir = tempfile::tempdir().unwrap();
    let corner = dir.path().join("corner.csv");
    let o = tripanel(&[
        "plate",
        "--n",
        "2,4,16",
        "--window",
        "0.05,0.5",
        "--corner-out",
        corner.to_str().unwrap(),
    ]);
    let log = String::from_utf8_lossy(&o.stderr);
    assert!(o.status.success(), "{log}");
    let t = read_table(o.stdout.as_slice()).unwrap();
    let caps = t.floats("cap_over_4pi_eps0").unwrap();
    assert_eq!(caps.len(), 3);
    assert!(caps.windows(2).all(|w| w[1] > w[0]));
    for v in ["0.3607", "0.362", "0.367", "0.3667892", "0.3667874", "0.36684", "0.36"] {
        assert!(log.contains(v), "missing reference {v}");
    }
    assert!(log.contains("corner slope n=16"));
    let c = read_table(File::open(&corner).unwrap()).unwrap();
    expect_schema(&c, "corner", &["r", "sigma", "in_window"]).unwrap();
    assert_eq!(c.rows.len(), 8);
}
