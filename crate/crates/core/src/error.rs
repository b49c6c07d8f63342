use std::path::PathBuf;

use thiserror::Error;

use crate::backends::BackendError;
use crate::domain::ValidationIssue;
use crate::metrics::MetricError;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed:\n{}", format_issues(.0))]
    Validation(Vec<ValidationIssue>),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("store integrity error: {0}")]
    Integrity(String),
    #[error("corrupt store record in {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stats(#[from] conformity_stats::StatsError),
    #[error("bias probe: {0}")]
    Probe(String),
}

impl CoreError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io { path: path.into(), source }
    }

    /// True for problems with user input rather than with execution.
    pub fn is_validation(&self) -> bool {
        matches!(self, CoreError::Config(_) | CoreError::Validation(_) | CoreError::Backend(BackendError::Config(_)))
    }
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T> = std::result::Result<T, CoreError>;
