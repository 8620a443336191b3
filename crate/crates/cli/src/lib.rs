//! Config-driven experiment runner for `rdslab`.
//!
//! A run reads one TOML file, resolves and snaps it, executes the named experiment,
//! and writes a JSON summary plus optional CSV series into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod describe;
mod experiments;
mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind, SnapEntry};
pub use describe::describe;
pub use experiments::Check;
pub use report::{format_number, SCHEMA_VERSION};

/// Failure modes of a run, each with its process exit status.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<rdslab_core::Error> for RunError {
    fn from(e: rdslab_core::Error) -> Self {
        use rdslab_core::Error as E;
        match e {
            E::Divergence { .. } => RunError::Divergence(e.to_string()),
            E::LinearSolver { .. } => RunError::Runtime(e.to_string()),
            E::OutOfRange { .. } => RunError::Config(format!("noise.window: {e}")),
            E::Config { field, message } => RunError::Config(format!("{field}: {message}")),
            other => RunError::Config(other.to_string()),
        }
    }
}

/// A step-size retry after a divergence.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Retry {
    pub reason: String,
    pub from_dt: f64,
    pub to_dt: f64,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub experiment: ExperimentKind,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub summary_path: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Loads and resolves a config file without running it.
pub fn load(config_path: &Path) -> Result<(ExperimentConfig, Vec<SnapEntry>), RunError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| RunError::Config(format!("{}: {e}", config_path.display())))?;
    let mut cfg = config::parse(&text)?;
    let snaps = cfg.resolve()?;
    Ok((cfg, snaps))
}

/// Executes the experiment named in `config_path`. A divergence is retried once with
/// half the solver step; a second divergence is an error.
pub fn run(config_path: &Path, output_dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    let (mut cfg, mut snaps) = load(config_path)?;
    let mut retries = Vec::new();
    let outcome = match experiments::run(&cfg) {
        Err(RunError::Divergence(reason)) => {
            let from_dt = cfg.solver_dt();
            let to_dt = from_dt / 2.0;
            log::warn!("{reason}; retrying with dt = {to_dt}");
            cfg.solver.dt = Some(to_dt);
            snaps.extend(cfg.resolve()?);
            retries.push(Retry { reason, from_dt, to_dt });
            experiments::run(&cfg)?
        }
        other => other?,
    };
    let dir = output_dir.map_or_else(|| PathBuf::from(&cfg.output.directory), Path::to_path_buf);
    report::emit(&dir, &cfg, &snaps, &retries, outcome)
}
