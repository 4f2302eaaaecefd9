use thiserror::Error;

/// Failures of a CLI command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, penalty or model settings. Exit code 1.
    #[error("config error: {0}")]
    Config(String),

    /// Unreadable or malformed input data. Exit code 2.
    #[error("input error: {0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<dust_core::Error> for CliError {
    fn from(e: dust_core::Error) -> Self {
        use dust_core::Error as E;
        match e {
            E::Config(_) | E::Unsupported(_) | E::InfeasiblePenalty { .. } => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
