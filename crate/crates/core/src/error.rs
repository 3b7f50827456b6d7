use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the modeling and optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: String,
        found: String,
    },

    #[error("`{field}` is not symmetric (relative asymmetry {asymmetry:.3e})")]
    Symmetry { field: String, asymmetry: f64 },

    #[error("malformed `{field}`: {reason}")]
    Parse { field: String, reason: String },

    #[error("singular impedance system for configuration {fingerprint:016x}: {reason}")]
    Singular { fingerprint: u64, reason: String },

    #[error("user {user} has an identically zero channel; max-min balancing is infeasible")]
    InfeasibleUser { user: usize },

    #[error("duality power recovery failed: {0}")]
    Duality(String),

    #[error("refusing to enumerate 2^{0} configurations; use the continuous optimizer instead")]
    TooManyGroups(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(field: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            field: field.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures rooted in numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::InfeasibleUser { .. } | Error::Duality(_) | Error::Domain(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
