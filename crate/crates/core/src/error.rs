use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point (or a finite-difference stencil around it) left the domain.
    #[error("boundary violation: margin {margin:.3e} ({context})")]
    BoundaryViolation { margin: f64, context: String },

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("eigen-solver did not converge on a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("missing Einstein constant for base factor {factor}")]
    MissingEinsteinConstant { factor: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("decision contradicts series check at block (i={i}, sigma={sigma}): {detail}")]
    Contradiction { i: usize, sigma: usize, detail: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn boundary(margin: f64, context: impl Into<String>) -> Self {
        Error::BoundaryViolation { margin, context: context.into() }
    }
}
