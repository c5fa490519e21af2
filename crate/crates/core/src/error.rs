use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid action {action} for an environment with {num_actions} actions")]
    InvalidAction { action: usize, num_actions: usize },

    #[error("window at record {start} with lookahead {lookahead} {reason}")]
    Window {
        start: usize,
        lookahead: usize,
        reason: &'static str,
    },

    #[error("estimator `{estimator}` is not supported here: {reason}")]
    Unsupported { estimator: String, reason: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("non-finite {what} at update {step}")]
    NonFinite { what: &'static str, step: u64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("no valid windows: {0}")]
    EmptySource(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
