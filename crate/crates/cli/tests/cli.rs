use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

const FIELD: &str = r#""field": {"w1": "-x1 + x1^3 + x1*x2^2", "w2": "-x2/2", "ball": {"center": [0, 0], "radius": 0.6}, "seed": [0.01, 0.01]}"#;
const LINE: &str = r#""line": {"rho": [1.0, 1.5], "omega1": 1.0, "omega_high": [6.0]}"#;

fn cuspflow(dir: &Path, mode: &str, config: &str, envs: &[(&str, &str)]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cuspflow"))
        .arg(mode)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .envs(envs.iter().copied())
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("process exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    for (mode, cfg) in [
        ("validate", "{}"),
        ("validate", "{\"mode\": \"validate\", \"unexpected\": 1}"),
        ("validate", "{\"mode\": \"validate\""),
        ("analyze", "{\"mode\": \"validate\"}"),
        ("run2d", "{\"mode\": \"run2d\"}"),
        ("validate", "{\"mode\": \"validate\", \"curve\": {\"rtol\": -1}}"),
    ] {
        let o = cuspflow(dir.path(), mode, cfg, &[]);
        assert_eq!(code(&o), 2, "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = cuspflow(dir.path(), "validate", "{\"mode\": \"validate\", \"validate\": {\"criteria\": [1]}}", &[("CUSPFLOW_THREADS", "0")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_config_file_exits_with_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_cuspflow"))
        .args(["analyze", "--config", "/nonexistent/cuspflow.json"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn hypothesis_violation_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"mode": "analyze", "field": {"w1": "x1", "w2": "x2/2", "ball": {"center": [0, 0], "radius": 0.5}}}"#;
    let o = cuspflow(dir.path(), "analyze", cfg, &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = r#"{"mode": "run1d", "line": {"rho": [1.0], "omega1": -1.0, "omega_high": [6.0]}}"#;
    let o = cuspflow(dir.path(), "run1d", cfg, &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn analyze_reports_blow_up_point() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"mode": "analyze", {FIELD}, "density": "1 + 1.5*x1"}}"#);
    let o = cuspflow(dir.path(), "analyze", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("out/report.json"));
    let s = &r["singularity"];
    assert!((s["t0"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    for (k, v) in s["x0"].as_array().unwrap().iter().enumerate() {
        assert!(v.as_f64().unwrap().abs() < 1e-8, "x0[{k}]");
    }
    let h = &s["hessian_lambda1"];
    let at = |i: usize, j: usize| h[i][j].as_f64().unwrap();
    assert!((at(0, 0) - 6.0).abs() < 1e-6 && (at(1, 1) - 2.0).abs() < 1e-6);
    assert!(at(0, 1).abs() < 1e-6 && at(1, 0).abs() < 1e-6);
    let c = &r["curve_start"];
    assert!((c["rho0"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!((c["s0"].as_f64().unwrap() - 0.2).abs() < 1e-6);
}

#[test]
fn run1d_is_deterministic_and_manifest_hashes_match() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = format!(r#"{{"mode": "run1d", {LINE}, "track": {{"horizon": 0.2, "n_out": 50}}}}"#);
    for dir in [&a, &b] {
        let o = cuspflow(dir.path(), "run1d", &cfg, &[("CUSPFLOW_THREADS", "1")]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = read_json(&a.path().join("out/manifest.json"));
    assert_eq!(manifest["mode"], "run1d");
    let entries = manifest["artifacts"].as_array().unwrap();
    assert!(entries.iter().any(|e| e["path"] == "trajectory.csv"));
    for e in entries {
        let name = e["path"].as_str().unwrap();
        let bytes = fs::read(a.path().join("out").join(name)).unwrap();
        assert_eq!(e["sha256"].as_str().unwrap(), format!("{:x}", Sha256::digest(&bytes)), "{name}");
        assert_eq!(bytes, fs::read(b.path().join("out").join(name)).unwrap(), "{name} differs between runs");
    }
    let csv = fs::read_to_string(a.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,m,v,x_minus,x_plus,residual\n"));
    assert!(csv.lines().count() > 10);
}

#[test]
fn oracle1d_and_chart2d_write_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"mode": "oracle1d", {LINE}, "oracle": {{"particles": 4000, "offsets": [0.02]}}}}"#);
    let o = cuspflow(dir.path(), "oracle1d", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    let row: Vec<f64> = table.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[3] > 0.0, "merges expected");
    assert!(row[4] < 1e-2, "mass error {}", row[4]);

    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"mode": "chart2d", {FIELD}, "chart": {{"n_xi": 11}}}}"#);
    let o = cuspflow(dir.path(), "chart2d", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let chart = fs::read_to_string(dir.path().join("out/chart.csv")).unwrap();
    assert_eq!(chart.lines().count(), 12);
    assert!(fs::read_to_string(dir.path().join("out/gamma_star.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn validate_single_criterion() {
    let dir = TempDir::new().unwrap();
    let o = cuspflow(dir.path(), "validate", r#"{"mode": "validate", "validate": {"criteria": [1]}}"#, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS criterion 1"), "{stdout}");
    assert!(dir.path().join("out/checks.csv").exists());
}
