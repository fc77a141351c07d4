use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.3e} below {floor:.3e}")]
    NotPositive { min_eigenvalue: f64, floor: f64 },

    #[error("trace {trace:.6e} differs from 1 by more than {tol:.3e}")]
    NotNormalized { trace: f64, tol: f64 },

    #[error("state is not faithful: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotFaithful { min_eigenvalue: f64 },

    #[error("state does not commute with the conjugation: residual {residual:.3e}")]
    NotThetaInvariant { residual: f64 },

    #[error("state is not invariant: |L_*(rho)| = {residual:.3e} exceeds {tol:.3e}")]
    NotInvariant { residual: f64, tol: f64 },

    #[error("generator is not in special form for the given state: {reason}")]
    NotSpecial { reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),
}
