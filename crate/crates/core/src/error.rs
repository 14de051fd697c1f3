use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by grid construction, scenario parsing and output writing.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or unusable scenario (empty target, bad rectangles, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid argument to an operation (non-positive spacing, negative density, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Malformed scenario or grid file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration rather than the runtime.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Argument(_) | Error::Parse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
