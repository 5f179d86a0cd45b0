use std::path::Path;
use std::process::{Command, Output};

use cusp_spectra::verify::VerifyReport;
use cusp_spectra::weyl::WeylReport;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cusp-spectra"))
        .args(args)
        .env("CUSP_SPECTRA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn count_below_quarter_is_zero_on_cusps() {
    let out = cli(&["count", "--lambda", "0.3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["lower"], 0);

    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"cusps": [{"L": 2.0, "alpha2": 0.5, "b": 1.0, "holonomy": 1.0}, {"L": 1.0, "alpha2": 0.0, "b": 0.0, "holonomy": 3.0, "sign": -1}],
            "core": {"kind": "explicit_weyl", "area": 3.0, "remainder_coeff": 0.5}}"#,
    );
    let out = cli(&["count", "--surface", &s, "--lambda", "0.3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "0");
}

#[test]
fn non_discrete_surface_is_rejected_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"cusps": [{"L": 1.0, "alpha2": 0.0, "b": 3.0, "holonomy": 6.283185307179586}],
            "core": {"kind": "flat_rectangle", "width": 1.0, "height": 1.0}}"#,
    );
    for cmd in [vec!["count", "--lambda", "5"], vec!["weyl", "--lambda-max", "1000"]] {
        let mut args = cmd.clone();
        args.extend(["--surface", &s]);
        let out = cli(&args);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("not discrete") && err.contains("2πZ") && err.contains("9.25"), "{err}");
    }
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "bad.json", "{\"cusps\": [");
    let out = cli(&["count", "--surface", &s, "--lambda", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let s = write(
        dir.path(),
        "neg.json",
        r#"{"cusps": [{"L": -1, "alpha2": 0, "b": 0, "holonomy": 1}], "core": {"kind": "flat_rectangle", "width": 1, "height": 1}}"#,
    );
    assert_eq!(cli(&["count", "--surface", &s, "--lambda", "5"]).status.code(), Some(2));
    assert_eq!(cli(&["weyl", "--lambda-max", "10", "--lambda-min", "100"]).status.code(), Some(2));
}

#[test]
fn weyl_csv_has_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let out = cli(&["weyl", "--lambda-max", "10000", "--grid", "64", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,count_D,count_N,principal,resid_D,resid_N,normalized_resid_D,normalized_resid_N"
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    assert!(rows.iter().all(|r| r.len() == 8 && r[1] <= r[2]));
    assert_eq!(rows[63][0], 10000.0);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let run = |threads: &str, fmt: &str| {
        Command::new(env!("CARGO_BIN_EXE_cusp-spectra"))
            .args(["weyl", "--lambda-max", "3000", "--grid", "12", "--format", fmt])
            .env("CUSP_SPECTRA_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    for fmt in ["csv", "json"] {
        let a = run("1", fmt);
        assert!(!a.is_empty());
        assert_eq!(a, run("1", fmt));
        assert_eq!(a, run("3", fmt));
    }
}

#[test]
fn weyl_json_round_trips() {
    let out = cli(&["weyl", "--lambda-max", "2000", "--grid", "10", "--format", "json"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let report: WeylReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.lambda_grid.len(), 10);
    assert_eq!(report.to_json().unwrap().trim(), text.trim());
}

#[test]
fn eigenvalues_listing() {
    let out = cli(&["eigenvalues", "--lambda", "30", "--cusp", "0", "--bc", "neumann"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bc"], "neumann");
    let modes = v["modes"].as_array().unwrap();
    assert!(!modes.is_empty());
    for m in modes {
        let ev: Vec<f64> = m["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(ev.windows(2).all(|w| w[0] < w[1]));
        assert!(ev.iter().all(|e| *e > 0.25 && *e < 30.0));
    }
    assert_eq!(cli(&["eigenvalues", "--lambda", "30", "--cusp", "4"]).status.code(), Some(2));
}

#[test]
fn verify_seed_7_passes_with_machine_readable_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = cli(&["verify", "--seed", "7", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let report: VerifyReport = serde_json::from_str(&text).unwrap();
    assert!(report.passed);
    assert_eq!(report.seed, 7);
    assert!(report.checks.len() >= 9);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap().trim(), text.trim());
}

#[test]
fn verify_fails_on_impossible_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(
        dir.path(),
        "t.json",
        r#"{"titchmarsh_constant": -5.0, "quadrature_samples": 10, "titchmarsh_mus": [100.0],
            "sandwich_lambdas": [1000.0], "weyl_lambda_max": 2000.0, "weyl_grid": 8, "oracle_grid_points": 4000,
            "eigenvalue_tol": 1e-3}"#,
    );
    let out = cli(&["verify", "--thresholds", &t]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL titchmarsh_sandwich"));
}
