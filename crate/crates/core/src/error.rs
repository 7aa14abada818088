//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or configuration value is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a non-finite value or failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A safety cap on memory or iteration count was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The requested operation is not available for the given inputs,
    /// e.g. a coefficient preset without an exact solution.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
