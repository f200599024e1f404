use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("checksum mismatch in {path}: header says {expected:08x}, payload hashes to {actual:08x}")]
    Checksum {
        path: PathBuf,
        expected: u32,
        actual: u32,
    },

    #[error("unknown subreddit {name:?}; closest matches: {suggestions:?}")]
    UnknownName {
        name: String,
        suggestions: Vec<String>,
    },

    #[error("cosine undefined for a zero-norm vector")]
    ZeroNorm,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("non-finite loss at epoch {epoch}, entry ({row}, {col}) with count {count}")]
    NonFinite {
        epoch: usize,
        row: u32,
        col: u32,
        count: f64,
    },

    #[error("training data contains a single class ({0})")]
    SingleClass(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("stage {stage} needs {path}, which does not exist (enable the producing stage or supply the file)")]
    MissingDependency { stage: &'static str, path: PathBuf },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
