use thiserror::Error;

/// Errors raised by model construction, wiring, checks and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("topology is disconnected: node {unreachable} is not reachable from node 0")]
    Disconnected { unreachable: usize },

    #[error("unsupported check: {0}")]
    Unsupported(String),

    #[error("insufficient data: need at least {needed} samples, got {actual}")]
    InsufficientData { needed: usize, actual: usize },

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("simulation diverged: non-finite state at t = {time}")]
    Divergence { time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
