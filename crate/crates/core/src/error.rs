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

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Binary file violates its layout.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("duplicate id \"{id}\"{}", .context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    DuplicateId { id: String, context: Option<String> },

    #[error("unknown id \"{0}\"")]
    UnknownId(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error("{0}")]
    MissingField(String),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    /// Stable machine-readable code used in CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Format { .. } => "format",
            Error::DuplicateId { .. } => "duplicate-id",
            Error::UnknownId(_) => "unknown-id",
            Error::DimMismatch { .. } => "dim-mismatch",
            Error::InvalidInput(_) => "invalid-input",
            Error::MissingField(_) => "missing-field",
            Error::Usage(_) => "usage",
            Error::Json(_) => "json",
        }
    }
}
