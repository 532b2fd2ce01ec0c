use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty series")]
    EmptySeries,
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("series too short: {len} samples, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("pattern length {0} exceeds the 64-bit encoding limit of 20")]
    PatternTooLong(usize),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("missing series file for id(s): {}", .0.join(", "))]
    MissingSeries(Vec<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integration diverged at step {step}")]
    Diverged { step: usize },
    #[error("found only {found} peaks, {requested} requested")]
    NotEnoughPeaks { found: usize, requested: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no series accepted: {}", .0.join("; "))]
    NothingAccepted(Vec<String>),
    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
