use thiserror::Error;

use dnpu_core::analysis::AnalysisError;
use dnpu_core::device::DeviceError;
use dnpu_core::field::FieldError;
use dnpu_core::kinetics::KineticsError;
use dnpu_core::sampling::SamplingError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or unreadable inputs.
    #[error("configuration error: {0}")]
    Config(String),
    /// A solver or the KMC engine failed.
    #[error("physics/solver failure: {0}")]
    Physics(String),
    /// Inputs or results failed a consistency check.
    #[error("validation failure: {0}")]
    Validation(String),
    /// Stopped on request before finishing (test hook).
    #[error("interrupted after {0} samples")]
    Interrupted(u64),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Physics(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Interrupted(_) => 130,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DeviceError> for CliError {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::PlacementFailed { .. } => CliError::Physics(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Io(_) | FieldError::Json(_) => CliError::Config(e.to_string()),
            _ => CliError::Physics(e.to_string()),
        }
    }
}

impl From<KineticsError> for CliError {
    fn from(e: KineticsError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        use SamplingError::*;
        match e {
            Kinetics(_) => CliError::Physics(e.to_string()),
            EmptyDataset | Schema(_) | UndefinedEstimate(_) => CliError::Validation(e.to_string()),
            InvalidRanges(_) | Layout(_) | UnknownGate(_) | Io(_) | Csv(_) | Json(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Validation(e.to_string())
    }
}
