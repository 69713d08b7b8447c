//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide error type.
///
/// The variants separate caller bugs (`Contract`) from bad configuration
/// (`Config`), malformed external data (`Format`) and plain I/O failures,
/// so that callers such as the CLI can map them onto distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition of an operation was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid configuration (profiles, stage lists, mapping tables).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed external data file.
    #[error("format error in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    /// A per-sample failure, carrying the sample id for context.
    #[error("sample {sample_id}: {detail}")]
    Sample { sample_id: u64, detail: String },

    /// The configured per-sample error budget was exhausted.
    #[error("error budget exhausted after {errors} failed samples")]
    ErrorBudget { errors: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
