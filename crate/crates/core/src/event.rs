//! Journal events. Every state change is one of these; the engine applies
//! them through the same fold that replay uses.

use serde::{Deserialize, Serialize};

use crate::account::{Session, SessionId, UserAccount};
use crate::approval::PermissionRequest;
use crate::ids::{JobId, RequestId, UserId};
use crate::jobs::{ClaimRequest, Job};
use crate::rbac::Role;
use crate::state::PersistentState;
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Event {
    AccountCreated {
        account: UserAccount,
    },
    RoleAssigned {
        actor: UserId,
        user_id: UserId,
        role: Role,
    },
    RoleRevoked {
        actor: UserId,
        user_id: UserId,
        role: Role,
    },
    SessionOpened {
        session: Session,
    },
    SessionClosed {
        session_id: SessionId,
    },
    JobPosted {
        poster: UserId,
        job: Job,
        /// Approval grant spent on this post, if the poster is not an admin.
        grant: Option<RequestId>,
    },
    ClaimSubmitted {
        claim: ClaimRequest,
    },
    ClaimsResolved {
        actor: UserId,
        job_id: JobId,
        winner: UserId,
    },
    JobCompleted {
        actor: UserId,
        job_id: JobId,
    },
    PermissionRequested {
        request: PermissionRequest,
    },
    PermissionApproved {
        request_id: RequestId,
        approver: UserId,
    },
    BackupTaken {
        actor: UserId,
        location: String,
        taken_at: Timestamp,
    },
    StateRestored {
        actor: UserId,
        state: Box<PersistentState>,
    },
}

impl Event {
    pub const KINDS: [&'static str; 13] = [
        "AccountCreated",
        "RoleAssigned",
        "RoleRevoked",
        "SessionOpened",
        "SessionClosed",
        "JobPosted",
        "ClaimSubmitted",
        "ClaimsResolved",
        "JobCompleted",
        "PermissionRequested",
        "PermissionApproved",
        "BackupTaken",
        "StateRestored",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            Event::AccountCreated { .. } => "AccountCreated",
            Event::RoleAssigned { .. } => "RoleAssigned",
            Event::RoleRevoked { .. } => "RoleRevoked",
            Event::SessionOpened { .. } => "SessionOpened",
            Event::SessionClosed { .. } => "SessionClosed",
            Event::JobPosted { .. } => "JobPosted",
            Event::ClaimSubmitted { .. } => "ClaimSubmitted",
            Event::ClaimsResolved { .. } => "ClaimsResolved",
            Event::JobCompleted { .. } => "JobCompleted",
            Event::PermissionRequested { .. } => "PermissionRequested",
            Event::PermissionApproved { .. } => "PermissionApproved",
            Event::BackupTaken { .. } => "BackupTaken",
            Event::StateRestored { .. } => "StateRestored",
        }
    }

    pub fn is_known_kind(kind: &str) -> bool {
        Self::KINDS.contains(&kind)
    }
}

/// One line of the journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub sequence: u64,
    pub occurred_at: Timestamp,
    #[serde(flatten)]
    pub event: Event,
}
