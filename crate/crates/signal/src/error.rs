use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid recording: {0}")]
    Recording(String),

    #[error("sample rate {fs} Hz is too low: {reason}")]
    SampleRate { fs: f64, reason: String },

    #[error("malformed CSV {path}: {msg}")]
    Csv { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] tkrr_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
