use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("unknown stream {0}")]
    UnknownStream(u32),

    #[error("no overlap between inputs")]
    NoOverlap,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("label spreading did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unparseable URL {url:?}: {reason}")]
    Url { url: String, reason: String },

    #[error("unknown domain {0}")]
    UnknownDomain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing prerequisite artifact {0}")]
    MissingArtifact(PathBuf),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

impl Error {
    /// Process exit status for this error: 2 when a prerequisite stage
    /// artifact is missing, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingArtifact(_) => 2,
            _ => 1,
        }
    }
}
