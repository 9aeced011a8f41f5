use thiserror::Error;

/// Errors raised by the evidence computations and pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data cannot support the requested fit (e.g. zero spread).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Sample too small for the expected-count rule of thumb.
    #[error("insufficient data: {0}")]
    Insufficient(String),

    /// An iterative method failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed input file.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
