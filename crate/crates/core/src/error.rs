use std::ops::RangeInclusive;

/// Errors produced by the matrix kernels, the pruner and the cost model.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is singular or not positive definite (failing pivot {pivot})")]
    Singular { pivot: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("inverse-Hessian diagonal entry for column {column} is degenerate ({value:e})")]
    DegenerateDiagonal { column: usize, value: f64 },

    #[error(
        "calibration data is degenerate: trace(X X^T) = 0, cannot derive lambda automatically"
    )]
    DegenerateCalibration,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what} = {value} is outside {range:?}")]
    Domain {
        what: &'static str,
        value: f64,
        range: RangeInclusive<f64>,
    },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("flop ledger differs between repeats of the same cell (d = {d}, B = {block})")]
    NonReproducible { d: usize, block: usize },

    #[error("the tracking allocator is not installed as the global allocator")]
    AllocatorNotInstalled,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
