use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed manifest or config line. `line` is 1-based and counts the header.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot decode {path}: {msg}")]
    Decode { path: PathBuf, msg: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("missing predictions for {} clip(s): {}", .0.len(), .0.join(", "))]
    Coverage(Vec<String>),

    #[error("stage `{stage}` failed on clip `{clip}`: {source}")]
    Stage {
        stage: &'static str,
        clip: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str, clip: impl Into<String>) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                clip: clip.into(),
                source: Box::new(e),
            },
        }
    }
}
