//! Error type shared across the crate.

/// Errors produced by spec ingestion, solvers, and numeric routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The spec file could not be read or is not valid JSON.
    #[error("parse error: {0}")]
    Parse(String),

    /// The spec parsed but violates an invariant; `field` names the offender.
    #[error("validation error: field `{field}`: {message}")]
    Validation { field: String, message: String },

    /// Inputs whose shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The Toeplitz covariance has an eigenvalue below -1e-9.
    #[error("covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    /// Argument outside the domain of the requested function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver exhausted its budget with residual above tolerance.
    #[error("solver did not converge: {0}")]
    SolverDidNotConverge(String),

    /// The requested simulation codebook does not fit in memory.
    #[error("codebook too large: {0}")]
    CodebookTooLarge(String),
}

impl Error {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
