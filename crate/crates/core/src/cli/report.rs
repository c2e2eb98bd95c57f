//! JSON reports and CSV emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::report::CheckRecord;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub crate_version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Environment {
    pub fn current() -> Self {
        Self { crate_version: env!("CARGO_PKG_VERSION"), os: std::env::consts::OS, arch: std::env::consts::ARCH }
    }
}

/// Field order is fixed; `timestamp` is last and is the only field that
/// varies between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub files: Vec<String>,
    pub environment: Environment,
    pub timestamp: String,
}

impl Report {
    pub fn new(command: &str, config: serde_json::Value, mut checks: Vec<CheckRecord>, files: Vec<String>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            passed,
            checks,
            files,
            environment: Environment::current(),
            timestamp: format!("unix:{secs}"),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// A file produced by a command, written next to the report.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Full round-trip precision.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_all(dir: &Path, report_name: &str, report: &Report, artifacts: &[Artifact]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    let path = dir.join(report_name);
    std::fs::write(&path, report.to_json())?;
    Ok(path)
}
