use std::path::PathBuf;

use sparse_ident::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid config file {}: {source}", path.display())]
    Config { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn missing(flag: &str, context: &str) -> Self {
        CliError::Usage(format!("missing --{flag} (required by {context})"))
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Numerical breakdowns are solver failures; everything else is a bad argument.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Infeasible { .. } | CoreError::Budget { .. } | CoreError::NotFound { .. } | CoreError::Degenerate(_) => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
