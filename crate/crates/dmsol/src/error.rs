use crate::config::ConfigError;
use crate::io::FieldFileError;

/// Exit code 2 for usage, configuration and input problems, 1 otherwise.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("missing or unreadable input: {0}")]
    Input(String),
    #[error(transparent)]
    Field(#[from] FieldFileError),
    #[error("computation failed: {0}")]
    Numeric(#[from] dmsol_core::Error),
    #[error("output {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Input(_) | CliError::Field(_) => 2,
            CliError::Numeric(_) | CliError::Output { .. } => 1,
        }
    }

    pub(crate) fn output(path: &std::path::Path, message: impl ToString) -> Self {
        CliError::Output { path: path.display().to_string(), message: message.to_string() }
    }
}
