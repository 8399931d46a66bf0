use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = OtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum OtError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch in {what}: axis {axis} expected {expected} entries, got {got}")]
    ShapeMismatch {
        what: &'static str,
        axis: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported feature: {0}")]
    Unsupported(String),

    #[error("dense system of size {size} exceeds the cap of {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl OtError {
    pub(crate) fn shape(what: &'static str, axis: impl Into<String>, expected: usize, got: usize) -> Self {
        OtError::ShapeMismatch {
            what,
            axis: axis.into(),
            expected,
            got,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OtError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        OtError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
