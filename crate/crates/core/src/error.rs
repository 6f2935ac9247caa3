use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown dimension {0:?}")]
    UnknownDimension(String),

    #[error("duplicate record id {0:?}")]
    DuplicateId(String),

    #[error("record {id:?}: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("stratum {stratum} has {count} record(s); at least 2 are required")]
    StratumTooSmall { stratum: String, count: usize },

    #[error("vocabulary is empty (min_df = {min_df})")]
    EmptyVocabulary { min_df: usize },

    #[error("mask has {got} bits but the instance has {expected} distinct in-vocabulary tokens")]
    MaskLength { expected: usize, got: usize },

    #[error("expected feature dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data is empty")]
    EmptyTrainingSet,

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("{0}")]
    LengthMismatch(String),

    #[error("surrogate system is singular; use ridge_lambda > 0")]
    Singular,

    #[error("nothing to explain: no in-vocabulary tokens")]
    NothingToExplain,

    #[error("{features} features exceed the exact enumeration limit of {limit}")]
    TooManyFeatures { features: usize, limit: usize },

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
