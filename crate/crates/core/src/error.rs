use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: at least one observation is required")]
    EmptyInput,

    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },

    #[error("row {row}: negative {field} ({value})")]
    Negative {
        row: usize,
        field: &'static str,
        value: f64,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("quadrature did not converge (estimate {estimate}, residual {residual:e})")]
    Quadrature { estimate: f64, residual: f64 },

    #[error("degenerate denominator {value} at x = {x} (floor {floor})")]
    DegenerateDenominator { x: f64, value: f64, floor: f64 },

    #[error("replication {replication} at n = {n}: {source}")]
    Replication {
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Broad failure category, used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument { .. } | Error::Config { .. } => ErrorClass::Usage,
            Error::EmptyInput
            | Error::NonFinite { .. }
            | Error::Negative { .. }
            | Error::Parse { .. }
            | Error::Json(_) => ErrorClass::Data,
            Error::Quadrature { .. } | Error::DegenerateDenominator { .. } => ErrorClass::Numeric,
            Error::Replication { source, .. } => source.class(),
            Error::Io { .. } => ErrorClass::Io,
        }
    }
}
