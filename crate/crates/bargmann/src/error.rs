use crate::formats::FormatError;
use bargmann_core::Error;

/// Failures of a command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Format(#[from] FormatError),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{0}")]
    Contract(String),
    #[error("{0}")]
    Internal(String),
}

fn is_input(e: &Error) -> bool {
    matches!(
        e,
        Error::ZeroVector { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptyPointList
            | Error::SizeMismatch { .. }
            | Error::PoleCoordinates
            | Error::InvalidParameter(_)
            | Error::UnsupportedOrder { .. }
            | Error::NonPeriodicGrid
            | Error::PeriodicityViolation { .. }
            | Error::NormalizationViolation { .. }
    )
}

impl CliError {
    /// 2 for bad input, 3 for a violated numerical contract, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Format(_) => 2,
            CliError::Core(e) if is_input(e) => 2,
            CliError::Core(_) | CliError::Contract(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Input(_) => "InputError".into(),
            CliError::Format(FormatError::Contract(e)) | CliError::Core(e) => {
                let dbg = format!("{e:?}");
                dbg.split([' ', '(', '{'])
                    .next()
                    .unwrap_or("Error")
                    .to_string()
            }
            CliError::Format(_) => "FormatError".into(),
            CliError::Contract(_) => "ContractViolation".into(),
            CliError::Internal(_) => "InternalError".into(),
        }
    }

    /// The message printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "code": self.exit_code(), "message": self.to_string() })
    }
}
