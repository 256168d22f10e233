use spectral_flow::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("invalid configuration: {}{field}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation {
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical(e) => match e {
                Error::NotStarShaped(_)
                | Error::DegenerateBoundary(_)
                | Error::MissingDerivative(_)
                | Error::WrongBc { .. }
                | Error::NotSelfadjoint(_)
                | Error::InvalidInput(_) => 2,
                _ => 3,
            },
            CliError::Io(_) => 1,
            CliError::Failed(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
