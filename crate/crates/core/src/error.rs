use std::path::PathBuf;

/// Errors raised by the planning core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file or document could not be parsed.
    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    /// A structurally valid input violates a model invariant. `record` names
    /// the offending node, matrix entry or field.
    #[error("invalid {record}: {message}")]
    Validation { record: String, message: String },

    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("placement has {found} entries but the network has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },

    #[error("exhaustive enumeration needs {count} placements, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(record: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            record: record.into(),
            message: message.into(),
        }
    }

    pub fn parse(source_name: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
