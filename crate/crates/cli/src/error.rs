use std::fmt;
use std::path::Path;

use extrap_core::analysis::AnalysisError;
use extrap_core::config::ConfigError;
use extrap_core::map::MapError;
use extrap_core::metrics::TableError;
use extrap_core::scene::SceneError;
use extrap_core::sim::SimError;

/// A failed command, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    AllFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Io(_) => 2,
            Self::AllFailed(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Validation(_) => "validation",
            Self::Io(_) => "io",
            Self::AllFailed(_) => "simulation",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) | Self::Io(m) | Self::AllFailed(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        if e.is_io() {
            Self::Io(e.to_string())
        } else {
            Self::Validation(e.to_string())
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Io { .. } => Self::Io(e.to_string()),
            SceneError::Csv(ref c) if c.is_io_error() => Self::Io(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Io { .. } => Self::Io(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::AllFailed { .. } => Self::AllFailed(e.to_string()),
            SimError::Log(s) => s.into(),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::Io(_) => Self::Io(e.to_string()),
            TableError::Csv(ref c) if c.is_io_error() => Self::Io(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Sim(s) => s.into(),
            _ => Self::Validation(e.to_string()),
        }
    }
}
