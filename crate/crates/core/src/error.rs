//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TailmixError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TailmixError {
    /// A parameter or argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller violated a structural contract (vector lengths, mismatched fits, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input data cannot be used as given.
    #[error("data error: {0}")]
    Data(String),

    /// A line of an input file could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// No restart of the optimizer produced a feasible, finite solution.
    #[error("fit failed for {model}: {message}")]
    FitFailure { model: String, message: String },

    /// Degenerate sample for a tail estimator.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TailmixError {
    fn from(e: std::io::Error) -> Self {
        TailmixError::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> TailmixError {
    TailmixError::Domain(msg.into())
}
