use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric abort: {0}")]
    Numeric(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 0 ok, 1 configuration (and i/o), 2 numeric abort, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<cpest_core::Error> for CliError {
    fn from(e: cpest_core::Error) -> Self {
        if e.is_numeric_abort() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
