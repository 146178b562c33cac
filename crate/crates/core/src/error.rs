use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the sampling, basis and I/O routines.
#[derive(Debug, Error)]
pub enum MessError {
    /// Input data violates a structural invariant (shape, finiteness).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input is valid but too degenerate for the requested operation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An iterative or time-stepping routine failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A streamed snapshot did not match the dimension of its predecessors.
    #[error("stream error at snapshot {index}: expected dimension {expected}, got {found}")]
    Stream {
        index: usize,
        expected: usize,
        found: usize,
    },

    /// A file could not be decoded; `offset` is the byte position of the fault.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MessError {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        MessError::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MessError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = MessError> = std::result::Result<T, E>;
