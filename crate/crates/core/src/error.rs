use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// Variants are grouped so front ends can map them onto exit statuses:
/// shape/label/usage and density-matrix invariant violations are input
/// validation failures, the remainder are numerical failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("matrix is not Hermitian: max |M - M^H| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("trace deviates from 1 by {deviation:e}")]
    TraceDeviation { deviation: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular {what}: eigenvalue {eigenvalue:e} at or below cutoff {cutoff:e}")]
    Singular {
        what: String,
        eigenvalue: f64,
        cutoff: f64,
    },

    #[error("degenerate spectrum of sigma_e: minimum eigenvalue gap {gap:e}")]
    Degenerate { gap: f64 },

    #[error("operators do not commute: {what} residual {residual:e}")]
    NonCommuting { what: String, residual: f64 },

    #[error("sigma is not block diagonal in the e sector: off-block residual {residual:e}")]
    BlockStructure { residual: f64 },

    #[error("extracted decomposition is inconsistent: {0}")]
    ExtractionConsistency(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of input validation (malformed or invalid states),
    /// false for failures of the numerics on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Shape(_)
                | Error::UnknownLabel(_)
                | Error::Usage(_)
                | Error::NotHermitian { .. }
                | Error::TraceDeviation { .. }
                | Error::NotPositive { .. }
                | Error::InvalidWeights(_)
                | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
