use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum MorreyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("divergent tail integral for {0}")]
    DivergentTail(String),

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("no zero set: {0}")]
    NoZeroSet(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MorreyError>;

impl MorreyError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        MorreyError::InvalidInput(msg.into())
    }
}
