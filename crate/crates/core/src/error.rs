use thiserror::Error;

use crate::ids::{JobId, RequestId};
use crate::rbac::{DenyReason, EmptyRoleSet};
use crate::store::{BackupError, StoreError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("denied: {0}")]
    Denied(DenyReason),
    #[error("session has expired")]
    SessionExpired,
    #[error("unknown session token")]
    UnknownToken,
    #[error("bad credentials")]
    BadCredentials,
    #[error("username `{0}` is taken")]
    DuplicateUsername(String),
    #[error("password must be at least {min} characters")]
    WeakPassword { min: usize },
    #[error("invalid username: {0}")]
    InvalidUsername(String),
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("unknown permission request {0}")]
    UnknownRequest(RequestId),
    #[error("job {0} is not open")]
    JobNotOpen(JobId),
    #[error("job {0} is not assigned")]
    JobNotAssigned(JobId),
    #[error("a claim by this user is already pending on job {0}")]
    DuplicateClaim(JobId),
    #[error("no pending claims on job {0}")]
    NoClaims(JobId),
    #[error("cannot remove the last role of `{0}`")]
    LastRole(String),
    #[error("permission request {0} is already resolved")]
    AlreadyResolved(RequestId),
    #[error("an admin account already exists")]
    AlreadyInitialized,
    #[error(transparent)]
    EmptyRoleSet(#[from] EmptyRoleSet),
    #[error(transparent)]
    Storage(#[from] StoreError),
    #[error(transparent)]
    Backup(#[from] BackupError),
}

impl From<DenyReason> for EngineError {
    fn from(r: DenyReason) -> Self {
        EngineError::Denied(r)
    }
}

impl EngineError {
    /// Machine-readable code, shared with the HTTP and CLI surfaces.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Denied(r) => r.code(),
            EngineError::SessionExpired => "SessionExpired",
            EngineError::UnknownToken => "UnknownToken",
            EngineError::BadCredentials => "BadCredentials",
            EngineError::DuplicateUsername(_) => "DuplicateUsername",
            EngineError::WeakPassword { .. } => "WeakPassword",
            EngineError::InvalidUsername(_) => "InvalidUsername",
            EngineError::InvalidJob(_) => "InvalidJob",
            EngineError::UnknownUser(_) => "UnknownUser",
            EngineError::UnknownJob(_) => "UnknownJob",
            EngineError::UnknownRequest(_) => "UnknownRequest",
            EngineError::JobNotOpen(_) => "JobNotOpen",
            EngineError::JobNotAssigned(_) => "JobNotAssigned",
            EngineError::DuplicateClaim(_) => "DuplicateClaim",
            EngineError::NoClaims(_) => "NoClaims",
            EngineError::LastRole(_) => "LastRole",
            EngineError::AlreadyResolved(_) => "AlreadyResolved",
            EngineError::AlreadyInitialized => "AlreadyInitialized",
            EngineError::EmptyRoleSet(_) => "EmptyRoleSet",
            EngineError::Storage(e) => e.code(),
            EngineError::Backup(e) => e.code(),
        }
    }

    pub fn deny_reason(&self) -> Option<DenyReason> {
        match self {
            EngineError::Denied(r) => Some(*r),
            _ => None,
        }
    }
}
