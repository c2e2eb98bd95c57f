use std::path::Path;
use std::process::{Command, Output};

fn ddkp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddkp"))
        .args(args)
        .arg("--quiet")
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn with_config(cmd: &str, json: &str) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, json).unwrap();
    let out = ddkp(dir.path(), &[cmd, "--config", cfg.to_str().unwrap()]);
    (dir, out)
}

fn report(dir: &Path, cmd: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{cmd}_report.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ddkp(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(ddkp(dir.path(), &["curve", "--config", "/nonexistent.json"]).status.code(), Some(2));
    let (_d, out) = with_config("curve", "{\"unknown\": 1}");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn near_real_axis_sampling_exits_2() {
    let (_d, out) = with_config("identities", r#"{"im_tau": [0.05, 2.0]}"#);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_sample_set_exits_2() {
    let (_d, out) = with_config("curve", r#"{"samples": 0}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unattainable_tolerance_exits_1_with_report() {
    let (d, out) = with_config("identities", r#"{"samples": 10, "fd_tolerance": 1e-16}"#);
    assert_eq!(out.status.code(), Some(1));
    let r = report(d.path(), "identities");
    assert_eq!(r["passed"], false);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["fd_tolerance"], 1e-16);
}

#[test]
fn pole_abort_exits_1_with_location() {
    let cfg = r#"{
        "path": {"start": [0.0, 1.0], "end": [0.0, 1.1]},
        "driving": {"kind": "table", "s": [0.0, 0.5, 1.0], "xi": [[0.3, 0.0], [0.0, 0.0], [0.3, 0.0]]},
        "step": 0.01
    }"#;
    let (d, out) = with_config("evolve", cfg);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(d.path(), "evolve");
    let check = &r["checks"][0];
    assert_eq!(check["name"], "trajectory");
    assert!(check["detail"].as_str().unwrap().contains("aborted at s ="));
}

#[test]
fn seed_override_changes_samples_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = ddkp(dir.path(), &["curve", "--seed", "7", "--steps", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "curve");
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["config"]["samples"], 5);
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}
