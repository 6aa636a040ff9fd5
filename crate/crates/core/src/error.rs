use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GeaError> = std::result::Result<T, E>;

/// Errors raised by the chat transport.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("authentication rejected by {endpoint} (status {status})")]
    Auth { endpoint: String, status: u16 },
    #[error("request to {endpoint} timed out after {attempts} attempt(s)")]
    Timeout { endpoint: String, attempts: u32 },
    #[error("{endpoint} returned status {status} after {attempts} attempt(s): {body}")]
    Status {
        endpoint: String,
        status: u16,
        attempts: u32,
        body: String,
    },
    #[error("connection to {endpoint} failed after {attempts} attempt(s): {message}")]
    Connect {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("malformed response body from {endpoint}: {message}")]
    MalformedBody {
        endpoint: String,
        message: String,
        raw: String,
    },
    #[error("credential environment variable `{0}` is not set")]
    MissingCredential(String),
}

#[derive(Debug, Error)]
pub enum GeaError {
    #[error("configuration error{}: {message}", fmt_line(*line))]
    Config { line: Option<usize>, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("template error: {0}")]
    Template(String),

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("join error: {0}")]
    Join(String),

    #[error("state error: {0}")]
    State(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("runs are not comparable: {0}")]
    Comparability(String),

    #[error(transparent)]
    Transport(#[from] TransportError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed line {line} in {path}: {message}")]
    Store {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn fmt_line(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

impl GeaError {
    pub fn config(message: impl Into<String>) -> Self {
        GeaError::Config {
            line: None,
            message: message.into(),
        }
    }

    pub fn config_at(line: Option<usize>, message: impl Into<String>) -> Self {
        GeaError::Config {
            line,
            message: message.into(),
        }
    }

    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        GeaError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GeaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, stored in failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            GeaError::Config { .. } => "config",
            GeaError::Domain(_) => "domain",
            GeaError::Template(_) => "template",
            GeaError::Validation { .. } => "validation",
            GeaError::InsufficientData(_) => "insufficient-data",
            GeaError::Join(_) => "join",
            GeaError::State(_) => "state",
            GeaError::NotFound(_) => "not-found",
            GeaError::Comparability(_) => "comparability",
            GeaError::Transport(_) => "transport",
            GeaError::Io { .. } => "io",
            GeaError::Store { .. } => "store",
        }
    }
}
