use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use jobgate_core::store::{BackupError, StoreError};
use jobgate_core::{DenyReason, EngineError};
use serde::{Deserialize, Serialize};

/// Error body of every failed request: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "UnknownToken", message)
    }
}

pub fn deny_status(reason: DenyReason) -> StatusCode {
    match reason {
        DenyReason::NotAdmin
        | DenyReason::WrongLevel
        | DenyReason::NoApproval
        | DenyReason::NotSuperior
        | DenyReason::NotAssignee => StatusCode::FORBIDDEN,
        DenyReason::WindowClosed => StatusCode::CONFLICT,
        DenyReason::TransactionLimit => StatusCode::TOO_MANY_REQUESTS,
        DenyReason::SessionExpired => StatusCode::UNAUTHORIZED,
    }
}

pub fn engine_status(err: &EngineError) -> StatusCode {
    use EngineError::*;
    match err {
        Denied(reason) => deny_status(*reason),
        SessionExpired | UnknownToken | BadCredentials => StatusCode::UNAUTHORIZED,
        DuplicateUsername(_) | DuplicateClaim(_) | JobNotOpen(_) | JobNotAssigned(_) | NoClaims(_)
        | LastRole(_) | AlreadyResolved(_) | AlreadyInitialized => StatusCode::CONFLICT,
        WeakPassword { .. } | InvalidUsername(_) | InvalidJob(_) => StatusCode::BAD_REQUEST,
        UnknownUser(_) | UnknownJob(_) | UnknownRequest(_) => StatusCode::NOT_FOUND,
        Backup(BackupError::Parse(_) | BackupError::UnsupportedVersion(_)) => StatusCode::BAD_REQUEST,
        Backup(BackupError::Io { .. }) | Storage(_) | EmptyRoleSet(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<EngineError> for ApiError {
    fn from(err: EngineError) -> Self {
        let status = engine_status(&err);
        let message = match &err {
            // don't leak filesystem details to clients
            EngineError::Storage(StoreError::Io { .. }) | EngineError::Backup(BackupError::Io { .. }) => {
                tracing::error!(error = %err, "storage failure");
                "storage failure".to_owned()
            }
            _ => err.to_string(),
        };
        ApiError {
            status,
            code: err.code().to_owned(),
            message,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rej: JsonRejection) -> Self {
        ApiError::bad_request("InvalidRequest", rej.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(rej: PathRejection) -> Self {
        ApiError::bad_request("InvalidRequest", rej.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}
