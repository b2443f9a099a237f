//! Error type shared across the crate.
//!
//! Two categories matter operationally: configuration/input errors (bad
//! registers, invalid grids, out-of-range indices) and solver failures
//! (guard violations, non-finite objectives, ill-conditioned systems).
//! The CLI maps them to distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: malformed config, out-of-range index, bad grid, …
    #[error("configuration error: {0}")]
    Config(String),
    /// Numerical failure: step guard violated, singular system, …
    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
