use thiserror::Error;

/// Errors produced by the tensor kernel machine core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dense tensor of {entries} entries exceeds the cap of {cap}")]
    Size { entries: u128, cap: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("input {value} for dimension {dim} lies outside [-{half_width}, {half_width}]")]
    Domain {
        dim: usize,
        value: f64,
        half_width: f64,
    },

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("unsupported model format version: {0}")]
    FormatVersion(String),

    #[error("malformed model file at line {line}: {msg}")]
    Format { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
