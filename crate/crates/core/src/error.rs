use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by instance construction, environments, oracles and runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("degenerate subset: every member has score -inf")]
    DegenerateSubset,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("no arm lies outside the epsilon-best set")]
    NoSuboptimalArm,

    #[error("every (subset, arm) advantage ratio is infinite")]
    InfiniteBar,

    #[error("empty candidate set")]
    EmptyCandidate,

    #[error("corrupt transcript: {0}")]
    CorruptLog(String),

    #[error("scaling fit: {0}")]
    Fit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn subset(msg: impl Into<String>) -> Self {
        Error::InvalidSubset(msg.into())
    }
}
