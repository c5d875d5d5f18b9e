use thiserror::Error;

/// Errors raised by the numerical routines and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The principal logarithm is not unique: an eigenvalue sits on -1.
    #[error("branch ambiguity: eigenphase {phase} is within {tolerance:e} of pi")]
    BranchAmbiguity { phase: f64, tolerance: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("decomposition failed to converge: {0}")]
    Convergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
