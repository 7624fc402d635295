use thiserror::Error;

/// Command failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations (exit code 1).
    #[error("usage error: {0}")]
    Usage(String),
    /// Unreadable, malformed or incompatible inputs (exit code 2).
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

macro_rules! data_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error_from!(
    tkrr_core::Error,
    tkrr_signal::Error,
    tkrr_eval::Error,
    std::io::Error,
    serde_json::Error
);

pub type CliResult<T> = std::result::Result<T, CliError>;
