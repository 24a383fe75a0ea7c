use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum PercError {
    #[error("invalid vertex: {0}")]
    InvalidVertex(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("coupling failed: {0}")]
    Coupling(String),
    #[error("invalid path: {0}")]
    Path(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, PercError>;
