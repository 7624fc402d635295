use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("cannot build folds: {0}")]
    Cv(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(transparent)]
    Core(#[from] tkrr_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
