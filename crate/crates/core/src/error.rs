use std::path::PathBuf;

/// Errors raised by the simulation toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// A binary container could not be decoded.
    #[error("malformed {kind} container: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a file path to validation and format errors so the caller can
    /// tell which input was at fault.
    pub fn in_file(self, path: &std::path::Path) -> Self {
        match self {
            Error::Invalid { field, reason } => Error::Invalid {
                field: format!("{field} (in {})", path.display()),
                reason,
            },
            Error::Format { kind, reason } => Error::Format {
                kind,
                reason: format!("{reason} (in {})", path.display()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
