use affwalk_core::Error as CoreError;

/// Failures of the command-line layer, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("output error: {0}")]
    Format(String),
}

impl CliError {
    /// 2 for bad input, 3 for resource or convergence failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::Validation(_) | CoreError::Domain(_)) | CliError::Config(_) => 2,
            CliError::Core(CoreError::Resource(_) | CoreError::Convergence { .. }) => 3,
            CliError::Io(_) | CliError::Format(_) => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Format(e.to_string())
    }
}
