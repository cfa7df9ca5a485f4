use thiserror::Error;

use crate::geometry::Point2;
use crate::solver::SolveReport;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum FdlmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible configuration: {0}")]
    IncompatibleConfiguration(String),

    #[error("domain violation: {message}")]
    DomainViolation {
        message: String,
        /// Offending points (quadrature nodes or vertices), if any.
        points: Vec<Point2>,
    },

    #[error("factorization failure: {0}")]
    FactorizationFailure(String),

    #[error("no convergence after {} iterations (relative residual {:.3e})", .0.iterations, .0.relative_residual)]
    NoConvergence(Box<SolveReport>),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FdlmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    pub(crate) fn incompatible(msg: impl Into<String>) -> Self {
        Self::IncompatibleConfiguration(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>, points: Vec<Point2>) -> Self {
        Self::DomainViolation {
            message: msg.into(),
            points,
        }
    }
}

pub type Result<T, E = FdlmError> = std::result::Result<T, E>;
