//! The `qpb-sim` experiment harness.
//!
//! [`parse_config`] merges defaults, an optional TOML file and command-line
//! flags (in increasing priority) into an [`ExperimentConfig`];
//! [`run_experiment`] evaluates the grid and writes one CSV or JSON file.
//!
//! Exit codes: 0 success, 1 failed verification, 2 invalid input,
//! 3 numeric overflow, 4 any other runtime failure.

mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::QpbError;
use crate::qcore::SqrtBranch;

pub use config::{parse_config, parse_int_list, parse_real_list};
pub use run::{run_experiment, RunOutcome, THREADS_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    PhaseDist,
    EntropyCurve,
    SRequired,
    Saturation,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PhaseDist => "phase-dist",
            Command::EntropyCurve => "entropy-curve",
            Command::SRequired => "s-required",
            Command::Saturation => "saturation",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// Where the data goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputTarget {
    Stdout,
    File(PathBuf),
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: Complex64,
    pub theta0: f64,
    pub r_grid: Vec<f64>,
    pub s_list: Vec<usize>,
    pub tolerance: f64,
    pub branch: SqrtBranch,
    pub output: OutputTarget,
    pub format: OutputFormat,
    /// Upper bound on the `S` search in `s-required`.
    pub cap: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Args(#[from] clap::Error),

    #[error("{0}")]
    Usage(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("{0}")]
    Runtime(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Args(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            CliError::Overflow(_) => 3,
            CliError::Runtime(_) | CliError::Io { .. } => 4,
        }
    }
}

impl From<QpbError> for CliError {
    fn from(e: QpbError) -> Self {
        match e {
            QpbError::OddTruncation(_) | QpbError::TruncationTooSmall(_) | QpbError::Domain(_) => {
                CliError::Usage(e.to_string())
            }
            QpbError::Overflow(m) => CliError::Overflow(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Parses, runs and reports; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(argv, None).and_then(|config| run_experiment(&config));
    match result {
        Ok(outcome) => {
            if !outcome.passed {
                eprintln!("verification failed: {}", outcome.failures.join(", "));
            }
            outcome.exit_code()
        }
        Err(CliError::Args(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("qpb-sim: {e}");
            e.exit_code()
        }
    }
}
