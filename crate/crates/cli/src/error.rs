use serde::Serialize;
use thiserror::Error;

use squeezed_arrays::Error as CoreError;

/// Process exit status for configuration problems.
pub const EXIT_CONFIG: i32 = 1;
/// Process exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message} at line {line}, column {column}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },

    #[error("unknown key `{key}` (task {task})")]
    UnknownKey { key: String, task: &'static str },

    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

/// Machine-readable error record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_bar_minus: Option<f64>,
}

impl CliError {
    pub fn invalid(key: &str, message: String) -> Self {
        CliError::Invalid {
            key: key.to_string(),
            message,
        }
    }

    pub fn from_json(e: serde_json::Error) -> Self {
        CliError::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_configuration() => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let mut r = ErrorReport {
            kind: if self.exit_code() == EXIT_NUMERICAL {
                "numerical"
            } else {
                "configuration"
            },
            message: self.to_string(),
            key: None,
            line: None,
            column: None,
            alpha_bar_minus: None,
        };
        match self {
            CliError::Parse { line, column, .. } => {
                r.line = Some(*line);
                r.column = Some(*column);
            }
            CliError::UnknownKey { key, .. } | CliError::Invalid { key, .. } => {
                r.key = Some(key.clone());
            }
            CliError::Core(CoreError::Threshold {
                alpha_bar_minus, ..
            }) => r.alpha_bar_minus = Some(*alpha_bar_minus),
            _ => {}
        }
        r
    }
}
