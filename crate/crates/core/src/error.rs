//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An enumeration or table would exceed a hard capacity cap.
    #[error("{what}: size {requested} exceeds cap {limit}")]
    Capacity {
        what: &'static str,
        limit: usize,
        requested: usize,
    },

    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Scenario generation could not produce usable data.
    #[error("scenario generation failed: {0}")]
    Generation(String),

    /// The LP solver failed in a way that cannot be expressed as a status.
    #[error("lp solver: {0}")]
    Solver(String),

    /// A serialized artifact could not be parsed or validated.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn capacity(what: &'static str, limit: usize, requested: usize) -> Self {
        Error::Capacity {
            what,
            limit,
            requested,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
