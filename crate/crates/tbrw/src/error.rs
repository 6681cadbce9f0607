use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown experiment `{name}`; valid experiments: {}", valid.join(", "))]
    UnknownExperiment {
        name: String,
        valid: Vec<&'static str>,
    },
    #[error("invalid config at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] tbrw_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RunError>;

impl RunError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            RunError::UnknownExperiment { .. } => "unknown_experiment",
            RunError::Config { .. } => "config",
            RunError::Io { .. } => "io",
            RunError::Core(tbrw_core::Error::ReplicaFailed { .. }) => "replica_failed",
            RunError::Core(_) => "core",
            RunError::Csv(_) => "csv",
            RunError::Json(_) => "json",
        }
    }

    /// Machine-readable form printed by the CLI on failure.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            field: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            valid: Option<&'a [&'static str]>,
            #[serde(skip_serializing_if = "Option::is_none")]
            replica: Option<usize>,
        }
        let (field, valid, replica) = match self {
            RunError::Config { field, .. } => (Some(field.as_str()), None, None),
            RunError::UnknownExperiment { valid, .. } => (None, Some(valid.as_slice()), None),
            RunError::Core(tbrw_core::Error::ReplicaFailed { index, .. }) => {
                (None, None, Some(*index))
            }
            _ => (None, None, None),
        };
        serde_json::to_value(Report {
            error: self.kind(),
            message: self.to_string(),
            field,
            valid,
            replica,
        })
        .expect("report serializes")
    }
}
