use std::path::PathBuf;

/// Configuration and input failures. Every variant maps to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown identity '{0}'; available: {catalog}", catalog = crate::config::CATALOG.join(", "))]
    UnknownIdentity(String),
    #[error("{context}: {source}")]
    Compute { context: String, source: duplex::Error },
    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } => "read",
            CliError::Write { .. } => "write",
            CliError::Config(_) => "config",
            CliError::UnknownIdentity(_) => "unknown_identity",
            CliError::Compute { .. } => "compute",
            CliError::Threads(_) => "threads",
        }
    }
}

pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for duplex::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Compute { context: what(), source })
    }
}
