//! Library half of the `annmoc` command-line tool.
//!
//! The binary is a thin wrapper; tests drive [`commands`] directly.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use annmoc::problems::ProblemError;
use annmoc::solver::SolverError;
use thiserror::Error;

pub use commands::{compare, oracle, run, CompareOutcome, OracleOutcome, RunOutcome};
pub use config::{CommonArgs, FileConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solver(SolverError),
    #[error("reference solve failed: {0}")]
    Reference(ProblemError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Solver(_) | CliError::Reference(_) => EXIT_FAILURE,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(_) | SolverError::MissingExactFlux => {
                CliError::Config(e.to_string())
            }
            other => CliError::Solver(other),
        }
    }
}
