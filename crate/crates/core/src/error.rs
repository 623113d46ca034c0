use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid node count {0}: between 2 and 5 nodes are supported")]
    InvalidNodeCount(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown subject `{0}`")]
    UnknownSubject(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("input is empty")]
    EmptyInput,

    #[error("confusion matrix holds no samples")]
    EmptyMatrix,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} truth labels vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {0} is outside 0..=8")]
    InvalidLabel(i64),

    #[error("at least two subjects are required, found {0}")]
    NeedMultipleSubjects(usize),

    #[error("invalid stream: {0}")]
    InvalidStream(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
