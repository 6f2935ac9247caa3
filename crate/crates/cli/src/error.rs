use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("cannot parse config {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path} not found; {hint}")]
    Missing { path: PathBuf, hint: &'static str },
    #[error("unknown record id `{0}`")]
    UnknownId(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(honeycomb_xai::Error),
}

impl From<honeycomb_xai::Error> for CliError {
    fn from(e: honeycomb_xai::Error) -> Self {
        match e {
            honeycomb_xai::Error::InvalidConfig { field, reason } => CliError::Config {
                field: field.to_string(),
                reason,
            },
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Qualify a component-level config error with the block it came from.
    pub(crate) fn in_block(self, block: &str) -> Self {
        match self {
            CliError::Config { field, reason } => CliError::Config {
                field: format!("{block}.{field}"),
                reason,
            },
            other => other,
        }
    }
}
