//! `ddkp` command line. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 usage, configuration or I/O error.

mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{load, ConfigError, Overrides, RunConfig};
use report::{write_all, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ddkp", version, about = "Elliptic dDKP: identities, curve, Loewner flows, hodograph solutions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON run configuration; omitted fields take demo defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed for sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for the report and artifacts.
    #[arg(long, global = true, env = "DDKP_OUT_DIR", default_value = "ddkp_out")]
    out: PathBuf,
    /// Multiply every tolerance by this factor.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
    /// Sample count (identities, curve) or number of integration steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Suppress the per-check summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Theta/Eisenstein identities and finite-difference laws at random points.
    Identities,
    /// The spectral curve at a fixed modulus.
    Curve,
    /// Integrate an elliptic Loewner flow.
    Evolve,
    /// Painlevé-normalized flow with a constant driving point.
    Painleve,
    /// Solve a hodograph reduction and verify it.
    Hodograph,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::Curve => "curve",
            Command::Evolve => "evolve",
            Command::Painleve => "painleve",
            Command::Hodograph => "hodograph",
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Math(#[from] crate::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

fn prepare<T: RunConfig>(g: &Global) -> Result<T, ConfigError> {
    let mut cfg: T = load(g.config.as_deref())?;
    cfg.apply(&Overrides { seed: g.seed, tol_scale: g.tol_scale, steps: g.steps });
    cfg.validate()?;
    Ok(cfg)
}

fn execute<T: RunConfig>(
    g: &Global,
    cmd: Command,
    f: fn(&T) -> crate::Result<commands::Outcome>,
) -> Result<Report, RunError> {
    let cfg: T = prepare(g)?;
    let out = f(&cfg)?;
    let value = serde_json::to_value(&cfg).expect("config serializes");
    let files = out.artifacts.iter().map(|a| a.name.clone()).collect();
    let report = Report::new(cmd.name(), value, out.checks, files);
    write_all(&g.out, &format!("{}_report.json", cmd.name()), &report, &out.artifacts)?;
    Ok(report)
}

fn summarize(report: &Report, out: &Path) {
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<32} max {:.3e}  tol {:.1e}", c.name, c.max_residual, c.tolerance);
    }
    println!(
        "{}: {} ({} checks) -> {}",
        report.command,
        if report.passed { "passed" } else { "FAILED" },
        report.checks.len(),
        out.display()
    );
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let g = &cli.global;
    let result = match cli.command {
        Command::Identities => execute(g, cli.command, commands::identities),
        Command::Curve => execute(g, cli.command, commands::curve),
        Command::Evolve => execute(g, cli.command, commands::evolve_cmd),
        Command::Painleve => execute(g, cli.command, commands::painleve),
        Command::Hodograph => execute(g, cli.command, commands::hodograph),
    };
    match result {
        Ok(report) => {
            if !g.quiet {
                summarize(&report, &g.out);
            }
            for c in report.failures() {
                eprintln!("check failed: {} ({}){}", c.name, c.anchor, c.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default());
            }
            if report.passed {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
