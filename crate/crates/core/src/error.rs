use thiserror::Error;

/// Structural and numerical failures raised by the problem model and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid constraint group {group}: {reason}")]
    InvalidGroup { group: usize, reason: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("gradient oracle of player {player} returned {actual} entries, expected {expected}")]
    OracleWidth {
        player: usize,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error("degenerate variational inequality: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance construction failed: {0}")]
    Instance(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
