use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpbError {
    #[error("truncation S = {0} is odd; S must be even so that the q-ladder has no interior zero")]
    OddTruncation(usize),

    #[error("truncation S = {0} is too small; S must be at least 2")]
    TruncationTooSmall(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("reference phase shift {shift} is not a multiple of the grid step {step}")]
    OffGrid { shift: f64, step: f64 },

    #[error("no even S <= {cap} meets relative tolerance {tolerance} at r = {r}")]
    NoSolution { r: f64, tolerance: f64, cap: usize },
}

pub type Result<T> = std::result::Result<T, QpbError>;
