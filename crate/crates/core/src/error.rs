use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("memory budget exceeded: {unknowns} unknowns > {budget}")]
    Budget { unknowns: usize, budget: usize },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("dictionary coverage: {0}")]
    Coverage(String),
    #[error("localization failure: {0}")]
    Localization(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
