use thiserror::Error;

/// Error type shared by all tracelab modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: ||A - A*|| = {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not self-adjoint")]
    NotSelfAdjoint,

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal mass {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("matrix is singular or too ill-conditioned for the requested operation")]
    SingularMatrix,

    #[error("matrix has a genuinely negative eigenvalue {lambda:.3e} (not roundoff)")]
    NotPsd { lambda: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("parameters ({p}, {q}, {s}) lie outside the region of reduction case {case}")]
    OutOfRegion { p: f64, q: f64, s: f64, case: &'static str },

    #[error("channel output lost strict positivity (min eigenvalue ratio {ratio:.3e})")]
    SingularOutput { ratio: f64 },

    #[error("invalid construction: {0}")]
    InvalidConstruction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
