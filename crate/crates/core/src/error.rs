use alloc::string::String;

/// Errors produced by the optimizer and its building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scale matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("scale matrix is not positive-definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The firework's shape matrix or step size is no longer usable; the
    /// swarm restarts the firework when it sees this.
    #[error("degenerate search state: {0}")]
    DegenerateState(String),

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("unknown benchmark function `{0}`")]
    UnknownFunction(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
