use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix deviates from Hermitian by {dev:.3e} (tolerance {tol:.3e})")]
    NotHermitian { dev: f64, tol: f64 },
    #[error("invalid leg index {leg} for a layout with {num_legs} legs")]
    BadLeg { leg: usize, num_legs: usize },
    #[error("eigendecomposition failed: {0}")]
    Eig(String),
    #[error("singular value decomposition failed: {0}")]
    Svd(String),
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("optimiser failed to converge: {0}")]
    NoConverge(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
