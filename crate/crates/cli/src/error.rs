use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Line 0 marks a whole-file check.
    #[error("config line {line}: `{field}`: {message}")]
    Config { line: usize, field: String, message: String },
    #[error("{context}: {source}")]
    Simulation {
        context: String,
        #[source]
        source: eraser_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(line: usize, field: &str, message: &str) -> Self {
        Self::Config { line, field: field.to_string(), message: message.to_string() }
    }

    pub fn simulation(context: impl Into<String>) -> impl FnOnce(eraser_core::Error) -> Self {
        let context = context.into();
        move |source| Self::Simulation { context, source }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io { path: path.display().to_string(), source }
    }

    /// Machine-readable form printed on failure.
    pub fn report(&self) -> ErrorReport {
        let (kind, line, field) = match self {
            CliError::Config { line, field, .. } => ("config", Some(*line), Some(field.clone())),
            CliError::Simulation { .. } => ("simulation", None, None),
            CliError::Io { .. } => ("io", None, None),
            CliError::Json(_) => ("json", None, None),
        };
        ErrorReport { kind, message: self.to_string(), line, field }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}
