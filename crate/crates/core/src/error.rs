use thiserror::Error;

/// Errors raised by the band construction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatches, out-of-range risks, etc.
    #[error("invalid input: {0}")]
    Input(String),

    /// A Gram matrix is too ill-conditioned to solve without regularization.
    #[error("ill-conditioned Gram matrix (condition estimate {condition:.3e}, cap {cap:.1e})")]
    Conditioning { condition: f64, cap: f64 },

    /// An iterative numerical routine failed to bracket or converge.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
