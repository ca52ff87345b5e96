//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation (out of range, wrong sign, ...).
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Tensor or operator shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A file did not follow the expected byte layout.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Operation requested on an operator/prior kind that cannot support it.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Numerical failure at run time (divergence, underflow).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// External embedding lookup failed for a sample index.
    #[error("missing embedding entry for sample index {index}")]
    MissingEmbedding { index: usize },

    /// Threshold calibration could not be performed.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A failure inside one noise-realization task, with the index attached.
    #[error("realization k={k}: {source}")]
    InRealization {
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    /// Attach a noise-realization index to an error bubbling out of a k-loop.
    pub fn in_realization(self, k: usize) -> Self {
        Error::InRealization {
            k,
            source: Box::new(self),
        }
    }
}
