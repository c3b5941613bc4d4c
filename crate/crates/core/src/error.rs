use thiserror::Error;

use crate::mdp::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coverage breach: target takes action {action} in state {state} but behavior never does")]
    Coverage { state: usize, action: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("stationary distribution is not unique (null space dimension {0})")]
    NotUnique(usize),

    #[error("stationary distribution component {value:e} at state {state} is not positive")]
    NonPositive { state: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid task:\n{0}")]
    Invalid(ValidationReport),

    #[error("analysis unavailable: {0}")]
    Unavailable(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("malformed problem file: {0}")]
    Problem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 4,
            Error::Singular(_)
            | Error::NotUnique(_)
            | Error::NonPositive { .. }
            | Error::NonFinite(_)
            | Error::Unavailable(_)
            | Error::Inconsistent(_) => 3,
            _ => 2,
        }
    }
}
