use thiserror::Error;

use crate::CMatrix;

#[derive(Debug, Error)]
pub enum PhsError {
    #[error("dimension mismatch in {matrix}: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    Dimension {
        matrix: String,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("{what} is numerically singular (sigma_min/sigma_max = {ratio:.3e})")]
    Singular { what: String, ratio: f64 },

    #[error("Jacobi eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("system description failed validation: {0}")]
    Validation(String),

    #[error("passivity certificate failed: {0}")]
    NotPassive(String),

    #[error("boundary closure singular: {message}\n{block}")]
    ClosureSingular { message: String, block: CMatrix },

    #[error("s = {s} is not in the resolvent set or the system is ill-posed there (boundary system sigma ratio {ratio:.3e})")]
    NotInResolvent { s: num_complex::Complex64, ratio: f64 },

    #[error("time step solve failed: {0}")]
    StepFailed(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PhsError>;
