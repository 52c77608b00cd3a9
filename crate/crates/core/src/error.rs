use thiserror::Error;

use crate::trajectory::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{0}")]
    Semantic(String),

    #[error("planning failed: {0}")]
    PlanningFailed(String),

    #[error("trajectory invalid: {}", summarize(.0))]
    InvalidTrajectory(Vec<Violation>),

    #[error("precedence graph contains a cycle")]
    Cycle,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn summarize(violations: &[Violation]) -> String {
    match violations.first() {
        Some(first) => format!("{} violation(s), first: {first}", violations.len()),
        None => "no violations recorded".to_string(),
    }
}
