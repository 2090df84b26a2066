//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n={expected}, got n={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} is already fixed in {pattern}")]
    CoordinateAlreadyFixed { index: usize, pattern: String },

    #[error("invalid probability mass: {detail}")]
    InvalidMass { detail: String },

    #[error("conditioning on a zero-mass region {pattern}")]
    ConditioningOnNull { pattern: String },

    #[error("component distribution leaks mass outside its piece {pattern}")]
    SupportLeakage { pattern: String },

    #[error("requested depth {depth} exceeds the {free} free coordinates of {pattern}")]
    DepthExceedsFree {
        depth: usize,
        free: usize,
        pattern: String,
    },

    #[error("no trained hypothesis stored for {pattern}")]
    MissingHypothesis { pattern: String },

    #[error(
        "cannot move {requested} probability mass with this noise mode; at most {movable} is movable"
    )]
    InfeasibleNoise { requested: f64, movable: f64 },

    #[error("sample of {got} examples is too small; this configuration needs at least {required}")]
    InsufficientSample { got: usize, required: usize },

    #[error("invalid parameter: {detail}")]
    InvalidParameter { detail: String },

    #[error("parse error: {detail}")]
    Parse { detail: String },

    #[error("internal invariant violated: {detail}")]
    InvariantViolation { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Distinguishes violated internal invariants from ordinary usage or
    /// configuration mistakes, so front ends can map them to different exit
    /// statuses.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::MissingHypothesis { .. }
                | Error::SupportLeakage { .. }
                | Error::InvariantViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
