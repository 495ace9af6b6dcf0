use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn homog(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homog"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("HOMOG_THREADS", "1")
        .output()
        .expect("spawn homog")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn effective_writes_json_and_csv() {
    let dir = tempdir().unwrap();
    let out = homog(
        &["effective", "--spec", "integrable", "--p-range", "-1:1:9", "--method", "minimax,quadrature"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("effective.json"));
    assert_eq!(doc["seed"], 42);
    assert!(doc["spec_digest"].as_str().unwrap().len() >= 16);
    let csv = fs::read_to_string(dir.path().join("effective.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("p,"));
    assert!(header.contains("minimax") && header.contains("quadrature"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn metrics_is_deterministic() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let args = ["metrics", "--spec", "pendulum", "--region", "sublevel:2"];
    assert_eq!(homog(&args, a.path()).status.code(), Some(0));
    assert_eq!(homog(&args, b.path()).status.code(), Some(0));
    let ja = fs::read(a.path().join("metrics.json")).unwrap();
    let jb = fs::read(b.path().join("metrics.json")).unwrap();
    assert_eq!(ja, jb);
    let doc: Value = serde_json::from_slice(&ja).unwrap();
    assert!((doc["gamma_inf"].as_f64().unwrap() - 1.0).abs() < 2e-2);
    assert!(a.path().join("metrics.csv").exists());
}

#[test]
fn counterexample_default_certifies() {
    let dir = tempdir().unwrap();
    let out = homog(&["counterexample"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&dir.path().join("certificate.json"));
    assert_eq!(doc["verdict"], true);
    assert!(doc["margin"].as_f64().unwrap() > 1.6);
}

#[test]
fn counterexample_insufficient_parameters_exit_3() {
    let dir = tempdir().unwrap();
    let out = homog(&["counterexample", "--c", "2.0"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(homog(&["counterexample", "--C", "0.05"], dir.path()).status.code(), Some(3));
    assert!(!dir.path().join("certificate.json").exists());
}

#[test]
fn configuration_errors_exit_1() {
    let dir = tempdir().unwrap();
    assert_eq!(homog(&["effective", "--spec", "no-such-spec"], dir.path()).status.code(), Some(1));
    assert_eq!(
        homog(&["counterexample", "--delta", "0.6"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        homog(&["metrics", "--spec", "pendulum", "--region", "ball"], dir.path()).status.code(),
        Some(1)
    );
}

#[test]
fn spec_file_round_trips() {
    let dir = tempdir().unwrap();
    let spec = homog::hamiltonian::builtin_spec("pendulum", 1).unwrap();
    let path = dir.path().join("spec.json");
    fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = homog(
        &["effective", "--spec", path.to_str().unwrap(), "--p-range", "0:0:1", "--method", "quadrature"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("effective.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((row[1] - 1.0).abs() < 1e-9);
}

#[test]
fn validate_single_suite() {
    let dir = tempdir().unwrap();
    let out = homog(&["validate", "--only", "fenchel"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&dir.path().join("validate.json"));
    let text = doc.to_string();
    assert!(text.contains("fenchel"));
    assert!(!text.contains("oracle-agreement"));
}
