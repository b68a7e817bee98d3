use thiserror::Error;

use crate::matalg::ComplexMatrix;

pub type Result<T> = std::result::Result<T, GhrrError>;

#[derive(Debug, Error)]
pub enum GhrrError {
    #[error("matrix dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("hypervector shape mismatch: (D={d1}, m={m1}) vs (D={d2}, m={m2})")]
    ShapeMismatch {
        d1: usize,
        m1: usize,
        d2: usize,
        m2: usize,
    },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("hypervector is not unitary; no element-wise inverse exists")]
    NotUnitary,

    #[error("diagonality is undefined for the zero matrix")]
    ZeroMatrix,

    #[error("optimizer did not reach target {target} after {iterations} iterations (best {achieved:.4})")]
    NonConvergence {
        target: f64,
        achieved: f64,
        iterations: usize,
        best: Box<ComplexMatrix>,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("column map is singular: entry ({row}, {col}) of the right factor is zero")]
    SingularColumnMap { row: usize, col: usize },

    #[error("input length {got} does not match encoder feature count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("input contains a non-finite value at index {0}")]
    NonFiniteInput(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
