use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: pivot {pivot:.3e} at index {index}")]
    Indefinite { pivot: f64, index: usize },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("not factorable: {0}")]
    NotFactorable(String),

    #[error("no convergence by n = {max_n}; last delta {last_delta:.3e}")]
    Convergence { max_n: usize, last_delta: f64 },

    #[error("range mismatch: {0}")]
    RangeMismatch(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),
}
