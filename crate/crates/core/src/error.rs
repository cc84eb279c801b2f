use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, attribute {column}")]
    NonFinite { row: usize, column: usize },

    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },

    #[error("code layout mismatch: ({d_a} dims, {bits_a} bits) vs ({d_b} dims, {bits_b} bits)")]
    CodeMismatch {
        d_a: usize,
        bits_a: u32,
        d_b: usize,
        bits_b: u32,
    },

    #[error("k = {k} is invalid for a sample of {n} points")]
    InvalidK { k: usize, n: usize },

    #[error("cannot split {n} points into {folds} folds")]
    InvalidFolds { folds: usize, n: usize },

    #[error("metric {metric} does not apply to {carrier}")]
    CarrierMismatch {
        metric: &'static str,
        carrier: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid mm2 spec: {0}")]
    InvalidSpec(String),

    #[error("n = {n}, trial {trial}: {source}")]
    Trial {
        n: usize,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
