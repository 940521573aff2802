//! Command-line configuration, serialized records and the mode runner.

mod config;
mod record;
mod runner;
mod stats;

pub use config::{
    parse_config, parse_state, resolve_config, ConfigFormat, Emit, Mode, ModeConfig, ParsedConfig, RawConfig, RunConfig,
};
pub use record::{
    parse_trajectory, read_trajectory, write_trajectory, write_trajectory_to, SerializedTrajectory, TrajectoryHeader,
    TrajectoryRow, TRAJECTORY_SCHEMA,
};
pub use runner::{run, RunSummary};
pub use stats::{write_stats, StatsSummary};

use std::path::PathBuf;

/// Errors at the command-line and file boundary.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown flag: {0}")]
    UnknownFlag(String),
    #[error("invalid value for `{field}`: {message}")]
    InvalidValue { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Numeric(#[from] crate::Error),
    /// Help or version text requested; not a failure.
    #[error("{0}")]
    Help(String),
}

impl CliError {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        CliError::InvalidValue { field: field.to_string(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 for configuration problems, 3 for numeric
    /// invariant violations, 1 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownFlag(_) | CliError::InvalidValue { .. } | CliError::Parse { .. } => 2,
            CliError::Numeric(e) if e.is_numeric() => 3,
            CliError::Numeric(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Help(_) => 0,
        }
    }
}
