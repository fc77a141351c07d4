use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Invalid(m) => CliError::Invalid(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
            other => other,
        }
    }
}

impl From<qmsep::Error> for CliError {
    fn from(e: qmsep::Error) -> Self {
        match e {
            qmsep::Error::Inconsistent(_) => CliError::Numerical(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
