use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] telecoupler_core::Error),
    #[error("experiment failure: {0}")]
    ExperimentFailure(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Serialization(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
