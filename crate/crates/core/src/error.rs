use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid database: {0}")]
    InvalidDatabase(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("k = {k} exceeds the number of patterns ({total})")]
    TooManyPatterns { k: usize, total: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{patterns} patterns exceed the materialization cap of {cap}; use the lazy search")]
    MaterializationCap { patterns: u128, cap: u128 },

    #[error("observed response violates its own selection event (constraint {constraint}, slack {slack:e})")]
    InfeasibleObservation { constraint: String, slack: f64 },

    #[error("invalid truncation interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("search aborted")]
    Aborted,
}
