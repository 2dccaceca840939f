use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum FdrError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for {len} hypotheses")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain too large: {0}")]
    DomainTooLarge(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FdrError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FdrError::InvalidInput(msg.into())
    }
}

pub type Result<T, E = FdrError> = std::result::Result<T, E>;
