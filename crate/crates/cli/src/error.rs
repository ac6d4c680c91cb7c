use thiserror::Error;

/// CLI-level errors carrying the process exit code: 2 for configuration
/// problems, 3 for data and file-format problems, 4 for numeric failures.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<hyperntf_core::Error> for CliError {
    fn from(e: hyperntf_core::Error) -> Self {
        use hyperntf_core::Error::*;
        match e {
            InvalidArgument(_) => CliError::Config(e.to_string()),
            NegativeEntry { .. } => CliError::Data(e.to_string()),
            DegenerateRank { .. } | DegenerateSpectrum { .. } | NumericFailure { .. } => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}
