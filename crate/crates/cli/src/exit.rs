use std::fmt;

use gapbound::Error;

/// Failure carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input text (exit 2).
    Parse(String),
    /// A precondition does not hold (exit 3).
    Precondition(String),
    /// The computation finished without a usable answer (exit 4).
    Inconclusive(String),
    /// A sampling budget ran out (exit 5).
    Budget(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Inconclusive(_) => 4,
            CliError::Budget(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Precondition(m) => write!(f, "precondition failed: {m}"),
            CliError::Inconclusive(m) => write!(f, "inconclusive: {m}"),
            CliError::Budget(m) => write!(f, "budget exhausted: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse { .. } => CliError::Parse(msg),
            Error::EmptyIntersection { .. } => CliError::Budget(msg),
            Error::NonConvergence(_) | Error::Degenerate(_) => CliError::Inconclusive(msg),
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::Infeasible(_)
            | Error::UnsupportedSet(_)
            | Error::EmptySet => CliError::Precondition(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
