use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("missing input {0}")]
    MissingInput(PathBuf),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Core(#[from] coappear_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl std::fmt::Display) -> Self {
        CliError::Parse { path: path.into(), line, message: message.to_string() }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        CliError::Format { path: path.into(), message: message.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Format { .. } => "format",
            CliError::Config(_) => "config",
            CliError::MissingInput(_) => "missing_input",
            CliError::EmptyCorpus => "empty_corpus",
            CliError::Core(e) => match e {
                coappear_core::Error::NotConverged { .. } => "not_converged",
                coappear_core::Error::Degenerate { .. } | coappear_core::Error::DegenerateSample(_) => "degenerate",
                _ => "invalid_input",
            },
        }
    }

    /// Machine-readable form printed on failure.
    pub fn record(&self) -> ErrorRecord {
        let (path, line) = match self {
            CliError::Io { path, .. } | CliError::Format { path, .. } | CliError::MissingInput(path) => {
                (Some(path.display().to_string()), None)
            }
            CliError::Parse { path, line, .. } => (Some(path.display().to_string()), Some(*line)),
            _ => (None, None),
        };
        ErrorRecord { error: ErrorBody { kind: self.kind(), message: self.to_string(), path, line } }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

pub type Result<T> = std::result::Result<T, CliError>;
