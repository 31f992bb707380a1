use protoctl_core::ledger::LedgerError;
use protoctl_core::ValidationError;
use serde::Serialize;
use thiserror::Error;

/// Failure of an engine call, already classified for exit codes and HTTP
/// statuses.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{message}")]
    Validation {
        code: String,
        message: String,
        field_path: Option<String>,
    },
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

/// Wire form of an error inside the API envelope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub field_path: Option<String>,
}

impl ServiceError {
    pub fn validation<E: ValidationError>(e: &E) -> Self {
        Self::Validation {
            code: e.code().to_string(),
            message: e.to_string(),
            field_path: e.field_path(),
        }
    }

    pub fn invalid(code: &str, message: impl Into<String>, field_path: Option<&str>) -> Self {
        Self::Validation {
            code: code.to_string(),
            message: message.into(),
            field_path: field_path.map(str::to_string),
        }
    }

    pub fn code(&self) -> &str {
        match self {
            Self::Validation { code, .. } => code,
            Self::UnknownSession(_) => "unknown_session",
            Self::BadRequest(_) => "bad_request",
            Self::Storage(_) => "storage_failure",
        }
    }

    pub fn field_path(&self) -> Option<&str> {
        match self {
            Self::Validation { field_path, .. } => field_path.as_deref(),
            _ => None,
        }
    }

    pub fn is_storage(&self) -> bool {
        matches!(self, Self::Storage(_))
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
            field_path: self.field_path().map(str::to_string),
        }
    }
}

impl From<LedgerError> for ServiceError {
    fn from(e: LedgerError) -> Self {
        if e.is_storage() {
            Self::Storage(e.to_string())
        } else {
            Self::validation(&e)
        }
    }
}
