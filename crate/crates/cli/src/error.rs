use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("numeric failure: {0}")]
    Numeric(#[from] hkflow_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Exit status conventions of the `hkflow` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    exit_code: i32,
    messages: Vec<String>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(vec![message.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Numeric(_) => exit::NUMERIC,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Config(list) => list.clone(),
            other => vec![other.to_string()],
        }
    }

    /// Single-line JSON record for stderr.
    pub fn to_record(&self) -> String {
        let record = ErrorRecord { error: self.kind(), exit_code: self.exit_code(), messages: self.messages() };
        serde_json::to_string(&record).expect("error record serializes")
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
