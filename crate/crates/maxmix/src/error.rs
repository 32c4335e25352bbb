//! Error type shared across the crate.

/// Failure categories, kept coarse so callers can map them to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain.
    #[error("parameter domain: {0}")]
    Domain(String),
    /// Invalid request or configuration.
    #[error("usage: {0}")]
    Usage(String),
    /// Malformed or degenerate input data.
    #[error("data: {0}")]
    Data(String),
    /// A numeric routine failed to reach its accuracy target.
    #[error("numeric: {0}")]
    Numeric(String),
    /// An optimizer exhausted its budget without meeting the stopping rule.
    #[error("non-convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Usage(_) => 2,
            Error::Data(_) => 3,
            Error::NonConvergence(_) => 4,
            Error::Numeric(_) => 5,
        }
    }
}
