use thiserror::Error;

/// Input errors: everything that makes a scenario unusable before any analysis runs.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario does not match the schema: {0}")]
    Schema(String),
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn violations(&self) -> Vec<String> {
        match self {
            CliError::Invalid(v) => v.clone(),
            other => vec![other.to_string()],
        }
    }
}
