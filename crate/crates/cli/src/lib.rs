//! Scenario runner behind the `oamsim` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error, 3 I/O error.

pub mod config;
pub mod run;
pub mod verify;

use std::fmt;
use std::io::Write;

use config::{Args, Scenario};

#[derive(Debug)]
pub enum CliError {
    Verification(String),
    Config(String),
    Io(String),
}

impl CliError {
    pub fn config(e: impl fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<oamsim_core::Error> for CliError {
    fn from(e: oamsim_core::Error) -> Self {
        match e {
            oamsim_core::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Executes one invocation, printing its report to stdout.
pub fn execute(args: &Args, env_seed: Option<&str>) -> Result<(), CliError> {
    let cfg = args.resolve(env_seed)?;
    if args.print_config {
        emit(&cfg.to_toml()?);
        return Ok(());
    }
    if cfg.scenario == Scenario::VerifyGates {
        let checks = verify::verify_gates(&cfg)?;
        emit(&checks.iter().map(|c| format!("{c}\n")).collect::<String>());
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Verification(failed.join(", ")))
        };
    }
    let (runs, summaries) = run::run_scenario(&cfg)?;
    let mut report = String::new();
    for (run, s) in runs.iter().zip(&summaries) {
        report += &format!("{}: mean expected-mode probability {:.4}, min {:.4}\n", s.name, s.efficiency, s.min_expected);
        report += &oamsim_core::io::render_table(&run.table);
    }
    report += &format!("wrote {} tables and {} to {}\n", summaries.len(), run::MANIFEST, cfg.out.display());
    emit(&report);
    Ok(())
}

/// Writes to stdout; a closed pipe is not an error for a report.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
