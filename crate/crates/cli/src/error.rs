use std::path::PathBuf;

use novas::NovasError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] NovasError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Read { .. } | CliError::Write { .. } => "io",
            CliError::Json { .. } => "data",
            CliError::Config(_) => "config",
        }
    }

    /// `error[category]: message` on one line.
    pub fn one_line(&self) -> String {
        let message = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {message}", self.category())
    }
}
