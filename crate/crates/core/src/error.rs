//! Crate-wide error type. Every fallible operation returns [`Result`];
//! malformed input is reported, never panicked on.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{0} is empty")]
    EmptyInput(&'static str),

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("duplicate node id {0} in contribution list")]
    DuplicateNode(u32),

    #[error("all reputations are zero; trust weights undefined")]
    ZeroTrust,

    #[error("sparse index {index} out of bounds for dimension {dim}")]
    SparseIndex { index: u32, dim: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("row {row}, column {column:?}: {message}")]
    BadCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },

    #[error("block height {actual} does not extend chain tip {tip}")]
    HeightMismatch { tip: u64, actual: u64 },

    #[error("block at height {height} does not reference the chain tip hash")]
    PrevHashMismatch { height: u64 },

    #[error("block size {size} bytes exceeds cap {cap}")]
    BlockOversize { size: u64, cap: u64 },

    #[error("ledger export line {line}: {message}")]
    Export { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
