//! Experiment runner for the `boke` optimizers: configuration, the
//! (problem × algorithm × seed) matrix, trace files, summaries and the
//! fill-distance report.

pub mod config;
pub mod fill;
pub mod matrix;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
