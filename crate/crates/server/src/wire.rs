//! JSON bodies of the HTTP API. The CLI's remote mode decodes the same types.

use jobgate_core::jobs::{AvailabilityWindow, ClaimRequest, Job, JobState};
use jobgate_core::store::BackupDocument;
use jobgate_core::{
    Action, JobId, Login, PermissionRequest, PersistentState, RequestId, RequestStatus, Resolution,
    Role, Timestamp, UserAccount, UserId,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Serialize, Deserialize)]
pub struct Credentials {
    pub username: String,
    pub password: String,
}

impl std::fmt::Debug for Credentials {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Credentials")
            .field("username", &self.username)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountView {
    pub user_id: UserId,
    pub username: String,
    pub roles: Vec<Role>,
    /// Effective priority, 1 (Admin) to 5 (Executive).
    pub priority: Option<u8>,
    pub created_at: Timestamp,
}

impl From<&UserAccount> for AccountView {
    fn from(a: &UserAccount) -> Self {
        AccountView {
            user_id: a.user_id.clone(),
            username: a.username.clone(),
            roles: a.roles.iter().copied().collect(),
            priority: a.effective_priority().ok().map(|p| p.get()),
            created_at: a.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub login_time: Timestamp,
    pub expires_at: Timestamp,
    pub account: AccountView,
}

impl LoginResponse {
    pub fn new(login: &Login, account: &UserAccount) -> Self {
        LoginResponse {
            token: login.token.as_str().to_owned(),
            login_time: login.session.login_time,
            expires_at: login.session.expires_at,
            account: account.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub login_time: Timestamp,
    pub expires_at: Timestamp,
    pub account: AccountView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowBody {
    pub opens_at: Timestamp,
    pub closes_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewJobBody {
    pub level: u8,
    #[serde(rename = "type")]
    pub job_type: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub window: Option<WindowBody>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimView {
    pub job_id: JobId,
    pub user_id: UserId,
    pub username: Option<String>,
    /// Claimant's priority as of now; resolution uses the same value.
    pub priority: Option<u8>,
    pub login_time: Timestamp,
    pub submitted_at: Timestamp,
}

impl ClaimView {
    pub fn new(c: &ClaimRequest, state: &PersistentState) -> Self {
        ClaimView {
            job_id: c.job_id.clone(),
            user_id: c.user_id.clone(),
            username: state.accounts.get(&c.user_id).map(|a| a.username.clone()),
            priority: state.priority_of(&c.user_id).map(|p| p.get()),
            login_time: c.login_time,
            submitted_at: c.submitted_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobView {
    pub job_id: JobId,
    pub assigned_by: String,
    pub assigned_on: Timestamp,
    pub level: u8,
    /// Role name of the target level, as shown in the board's level column.
    pub level_label: Role,
    #[serde(rename = "type")]
    pub job_type: String,
    pub description: String,
    pub window: Option<AvailabilityWindow>,
    pub state: JobState,
    pub claimed_by: Option<UserId>,
    /// Pending claims the caller may see, best first for admins.
    pub claims: Vec<ClaimView>,
}

impl JobView {
    pub fn new(job: &Job, state: &PersistentState) -> Self {
        JobView {
            job_id: job.job_id.clone(),
            assigned_by: job.assigned_by.clone(),
            assigned_on: job.assigned_on,
            level: job.target_level.get(),
            level_label: job.target_level.role(),
            job_type: job.job_type.clone(),
            description: job.description.clone(),
            window: job.window,
            state: job.state,
            claimed_by: job.claimed_by.clone(),
            claims: job.claims.iter().map(|c| ClaimView::new(c, state)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionView {
    pub job_id: JobId,
    pub winner: UserId,
    pub winner_username: Option<String>,
    /// Every claim in winning order; the head is the winner.
    pub ranking: Vec<ClaimView>,
}

impl ResolutionView {
    pub fn new(r: &Resolution, state: &PersistentState) -> Self {
        ResolutionView {
            job_id: r.job_id.clone(),
            winner: r.winner.clone(),
            winner_username: state.accounts.get(&r.winner).map(|a| a.username.clone()),
            ranking: r.ranking.iter().map(|c| ClaimView::new(c, state)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBody {
    pub username: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionBody {
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionView {
    pub request_id: RequestId,
    pub requester: UserId,
    pub action: Action,
    pub status: RequestStatus,
    pub approver: Option<UserId>,
    pub requested_at: Timestamp,
    pub consumed: bool,
}

impl From<&PermissionRequest> for PermissionView {
    fn from(r: &PermissionRequest) -> Self {
        PermissionView {
            request_id: r.request_id.clone(),
            requester: r.requester.clone(),
            action: r.action,
            status: r.status,
            approver: r.approver.clone(),
            requested_at: r.requested_at,
            consumed: r.consumed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackupBody {
    /// File name inside the server's backup directory.
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackupView {
    pub name: String,
    pub taken_at: Timestamp,
    pub accounts: usize,
    pub jobs: usize,
    pub requests: usize,
}

impl BackupView {
    pub fn new(name: String, doc: &BackupDocument) -> Self {
        BackupView {
            name,
            taken_at: doc.taken_at,
            accounts: doc.state.accounts.len(),
            jobs: doc.state.jobs.len(),
            requests: doc.state.requests.len(),
        }
    }
}
