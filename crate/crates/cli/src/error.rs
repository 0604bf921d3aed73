use std::path::{Path, PathBuf};

use condensate_core::{Error as CoreError, ValidationError};
use serde_json::json;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_EXPERIMENT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The experiment itself could not be carried out.
    #[error("experiment failed: {0}")]
    Experiment(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Core errors raised while resolving a config.
    pub fn setup(err: CoreError) -> Self {
        match err {
            CoreError::Validation(v) => CliError::Validation(v),
            other => CliError::Config(other.to_string()),
        }
    }

    /// Core errors raised once the experiment is underway.
    pub fn running(err: CoreError) -> Self {
        match err {
            CoreError::Validation(v) => CliError::Validation(v),
            other => CliError::Experiment(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Experiment(_) => EXIT_EXPERIMENT,
            _ => EXIT_CONFIG,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Experiment(_) => "experiment",
        }
    }

    /// The machine-readable form printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Validation(v) = self {
            body["violations"] = serde_json::to_value(&v.violations).unwrap_or_default();
        }
        json!({ "error": body })
    }
}
