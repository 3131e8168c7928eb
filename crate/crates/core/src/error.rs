use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point that must lie in the feasible set does not.
    #[error("point is not feasible: {0}")]
    Infeasible(String),

    #[error("unsupported feasible set: {0}")]
    UnsupportedSet(String),

    #[error("feasible set is empty")]
    EmptySet,

    /// Rejection sampling gave up before collecting enough feasible points.
    #[error("sampling budget exhausted after {draws} draws ({accepted} of {requested} points accepted)")]
    EmptyIntersection {
        draws: usize,
        accepted: usize,
        requested: usize,
    },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
