use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{path}: bad magic, not a tensor file")]
    BadMagic { path: PathBuf },

    #[error("{path}: truncated payload (expected {expected} bytes, found {found})")]
    TruncatedPayload { path: PathBuf, expected: u64, found: u64 },

    #[error("{path}: unknown dtype code {code}")]
    UnknownDtype { path: PathBuf, code: u8 },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input (as opposed to I/O failures).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
