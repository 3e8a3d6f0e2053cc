use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian (asymmetry {asymmetry:.3e} > tolerance {tolerance:.3e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty operator (dimension 0)")]
    EmptyOperator,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("invalid stochastic kernel: {0}")]
    InvalidKernel(String),

    #[error("outcome labels do not form an L x N grid")]
    NotAGrid,

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported cover: {0}")]
    UnsupportedCover(String),

    #[error("operator is singular: {0}")]
    Singular(String),

    #[error("empty family: {0}")]
    EmptyFamily(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
