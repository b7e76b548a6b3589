use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square ({n_rows}x{n_cols})")]
    NotSquare { n_rows: usize, n_cols: usize },

    #[error("matrix is not row-stochastic: row {row} {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("not a valid PageRank operator: {0}")]
    NotOperator(String),

    #[error("leaf index {index} out of range ({len} leaves)")]
    LeafOutOfRange { index: usize, len: usize },

    #[error("empty input")]
    Empty,

    #[error("invalid weight {0}: weights must be finite and nonnegative")]
    InvalidWeight(f64),

    #[error("all weights are zero")]
    ZeroTotal,

    #[error("invalid scale factor {0}")]
    InvalidScale(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: malformed edge line: {content:?}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        content: String,
    },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("bad matrix file: {0}")]
    BadFormat(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error(
        "tracked {quantity} disagrees with honest recomputation: tracked {tracked:e}, fresh {fresh:e}"
    )]
    Drift {
        quantity: &'static str,
        tracked: f64,
        fresh: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
