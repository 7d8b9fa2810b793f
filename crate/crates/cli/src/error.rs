use riskbench_core::canonical::CanonicalError;
use riskbench_core::registry::RegistryError;
use riskbench_core::scoring::ScoringError;
use riskbench_core::synthgen::SynthError;
use riskbench_core::tasks::TaskError;
use riskbench_service::{LedgerError, ServiceError};
use serde_json::json;

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub internal: bool,
}

impl CliError {
    pub fn user(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            internal: false,
        }
    }

    pub fn internal(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            internal: true,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::user("USAGE", message)
    }

    pub fn exit_code(&self) -> u8 {
        if self.internal {
            2
        } else {
            1
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({ "error": { "code": self.code, "message": self.message } }).to_string()
    }
}

/// Reading a file the user named is a user error when it does not exist.
pub fn read_input(path: &std::path::Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied | std::io::ErrorKind::IsADirectory => {
            CliError::user("INPUT_NOT_READABLE", format!("cannot read {}: {e}", path.display()))
        }
        _ => CliError::internal("IO", format!("cannot read {}: {e}", path.display())),
    })
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::internal("IO", e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io(io) => io.into(),
            SynthError::InvalidConfig(_) => CliError::user("INVALID_CONFIG", e.to_string()),
            SynthError::InfeasibleConfig(_) => CliError::user("INFEASIBLE_CONFIG", e.to_string()),
            SynthError::UnknownPreset(_) => CliError::user("UNKNOWN_PRESET", e.to_string()),
        }
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        let code = match &e {
            RegistryError::Io(_) | RegistryError::CorruptIndex(_) => return CliError::internal("STORAGE_FAILURE", e.to_string()),
            RegistryError::CardMismatch(_) => "CARD_MISMATCH",
            RegistryError::DuplicateVersion(_) => "DUPLICATE_VERSION",
            RegistryError::VersionNotMonotonic { .. } => "VERSION_NOT_MONOTONIC",
            RegistryError::ValidationFailed { .. } => "VALIDATION_FAILED",
            RegistryError::UnknownDataset(_) => "UNKNOWN_DATASET",
            RegistryError::BadVersion(_) => "BAD_VERSION",
            RegistryError::BadReference(_) => "BAD_REFERENCE",
            RegistryError::IntegrityFailure { .. } => "INTEGRITY_FAILURE",
        };
        CliError::user(code, e.to_string())
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        let code = match &e {
            TaskError::Registry(_) => {
                let TaskError::Registry(inner) = e else { unreachable!() };
                return inner.into();
            }
            TaskError::Io(_) | TaskError::Csv(_) => return CliError::internal("STORAGE_FAILURE", e.to_string()),
            TaskError::CorruptBundle(_) => return CliError::internal("CORRUPT_BUNDLE", "task bundle is damaged"),
            TaskError::InvalidSpec(_) => "INVALID_SPEC",
            TaskError::OutOfRange(_) => "OUT_OF_RANGE",
            TaskError::WindowExceedsHorizon { .. } => "WINDOW_EXCEEDS_HORIZON",
            TaskError::EmptyTestSet => "EMPTY_TEST_SET",
            TaskError::LabelSourceMissing { .. } => "LABEL_SOURCE_MISSING",
            TaskError::UnknownTask(_) => "UNKNOWN_TASK",
            TaskError::TaskExists(_) => "TASK_EXISTS",
        };
        CliError::user(code, e.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        let code = match &e {
            ScoringError::BadHeader { .. } => "BAD_HEADER",
            ScoringError::MissingPlayers(_) => "MISSING_PLAYERS",
            ScoringError::UnknownPlayers(_) => "UNKNOWN_PLAYERS",
            ScoringError::DuplicatePlayer { .. } => "DUPLICATE_PLAYER",
            ScoringError::BadValue { .. } => "BAD_VALUE",
            ScoringError::Csv(_) => "BAD_CSV",
            ScoringError::SingleClassKey | ScoringError::KindMismatch => "INVALID_SUBMISSION",
            ScoringError::CorruptKey(_) => return CliError::internal("CORRUPT_BUNDLE", "answer key is damaged"),
        };
        let mut message = e.to_string();
        if let ScoringError::MissingPlayers(players) | ScoringError::UnknownPlayers(players) = &e {
            let shown: Vec<&str> = players.iter().take(10).map(String::as_str).collect();
            message = format!("{message}: {}{}", shown.join(", "), if players.len() > 10 { ", ..." } else { "" });
        }
        CliError::user(code, message)
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::ValidationFailed(inner) => inner.into(),
            ServiceError::UnknownTask(_) => CliError::user("UNKNOWN_TASK", e.to_string()),
            ServiceError::UnknownDataset(_) => CliError::user("UNKNOWN_DATASET", e.to_string()),
            ServiceError::UnknownSubmission(_) => CliError::user("UNKNOWN_SUBMISSION", e.to_string()),
            ServiceError::BadRequest(_) => CliError::user("BAD_REQUEST", e.to_string()),
            ServiceError::StorageFailure(_) => CliError::internal("STORAGE_FAILURE", e.to_string()),
        }
    }
}

impl From<LedgerError> for CliError {
    fn from(e: LedgerError) -> Self {
        CliError::internal("STORAGE_FAILURE", e.to_string())
    }
}

impl From<CanonicalError> for CliError {
    fn from(e: CanonicalError) -> Self {
        CliError::user("INVALID_EVENTS", e.to_string())
    }
}
