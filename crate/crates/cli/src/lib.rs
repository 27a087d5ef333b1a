//! Config-driven experiment runner over the return-time estimators, plus the
//! self-checking suite behind the `verify` subcommand.

pub mod config;
pub mod plot;
pub mod runner;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration; exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// A verdict came back FAIL; exit code 1.
    #[error("verdict failure: {0}")]
    Fail(String),
    /// Estimator or I/O failure at runtime; exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Fail(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<recurrence_lab::Error> for CliError {
    fn from(e: recurrence_lab::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
