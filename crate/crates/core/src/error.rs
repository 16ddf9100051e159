use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the filterlab library and CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or structural argument failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An adaptive update produced a non-finite weight.
    #[error("filter diverged at iteration {iteration}: non-finite weight update")]
    Diverged { iteration: u64 },

    /// A steady-state prediction was requested on or beyond the stability boundary.
    #[error("step size {mu} is on or beyond the stability boundary: {detail}")]
    StabilityBoundary { mu: f64, detail: String },

    /// A configuration file could not be interpreted.
    #[error("config error ({location}): {message}")]
    Config { location: String, message: String },

    /// An I/O operation failed; the path gives context.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data file (WAV, impulse response, matrix CSV) has the wrong format.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// Shorthand for an [`Error::InvalidParameter`] with a formatted message.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Shorthand for an [`Error::Config`] carrying the offending key or line.
    pub fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
