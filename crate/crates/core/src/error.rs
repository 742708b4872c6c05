use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum NehariError {
    #[error("input error: {0}")]
    Input(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, tolerance {tol:e})")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("strong positivity precondition failed: min eigenvalue {min_eig:e} does not exceed margin {margin:e}")]
    Precondition { min_eig: f64, margin: f64 },

    #[error("block partition undefined for block order {0} (need at least 2)")]
    PartitionUndefined(usize),

    #[error("iteration breakdown: Q^2 - A22 has min eigenvalue {min_eig:e} (margin {margin:e})")]
    IterationBreakdown { min_eig: f64, margin: f64 },

    #[error("normalization failed: A11 has min eigenvalue {min_eig:e} (margin {margin:e})")]
    Normalization { min_eig: f64, margin: f64 },

    #[error(
        "kernel reduction breakdown: I - d22 has min eigenvalue {min_eig:e} (margin {margin:e})"
    )]
    ReductionBreakdown { min_eig: f64, margin: f64 },

    #[error("reduced map disagrees with the full map (relative error {rel_err:e})")]
    ReductionMismatch { rel_err: f64 },

    #[error("invalid state: {0}")]
    State(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("unsupported format_version {0} (expected 1)")]
    Version(i64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NehariError>;
