//! Experiment harness for the t-distribution fireworks optimizer: repeated
//! seeded runs, result and trace files, and rank-based comparisons.

pub mod cli;
pub mod experiment;
pub mod stats;

use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid or unresolvable experiment settings.
    #[error("config error: {0}")]
    Config(String),
    #[error("statistics error: {0}")]
    Stats(String),
    #[error(transparent)]
    Optimizer(#[from] tfwa_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
