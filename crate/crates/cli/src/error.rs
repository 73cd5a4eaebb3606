use std::process::ExitCode;

use peerde::de::DeError;
use peerde::models::ModelError;
use peerde::survey::SurveyError;
use peerde::synth::SynthError;
use thiserror::Error;

/// Failure of a command, carrying its exit code class.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 1.
    #[error("{0}")]
    Io(String),
    /// Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Exit code 3.
    #[error("{0}")]
    EmptyData(String),
    /// Exit code 4.
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::EmptyData(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<SurveyError> for CliError {
    fn from(e: SurveyError) -> Self {
        let msg = e.to_string();
        match e {
            SurveyError::Io(_) => CliError::Io(msg),
            SurveyError::EmptySlice(_) | SurveyError::EmptyDesign(_) => CliError::EmptyData(msg),
            SurveyError::DegenerateResponse(_) => CliError::Degenerate(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<DeError> for CliError {
    fn from(e: DeError) -> Self {
        match e {
            DeError::NonFiniteFitness { .. } => CliError::Degenerate(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Survey(inner) => inner.into(),
            ModelError::Evolution(inner) => inner.into(),
            ModelError::EmptySlice(_) => CliError::EmptyData(e.to_string()),
            ModelError::UndefinedAuc(_) | ModelError::InconsistentFit { .. } => {
                CliError::Degenerate(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Survey(inner) => inner.into(),
            SynthError::Io(_) => CliError::Io(e.to_string()),
            SynthError::IncompleteStudy(_) => CliError::EmptyData(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}
