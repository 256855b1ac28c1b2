//! Engine state and the event fold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::account::{Session, SessionId, UserAccount};
use crate::approval::{PermissionRequest, RequestStatus};
use crate::event::{Event, JournalRecord};
use crate::ids::{JobId, RequestId, UserId};
use crate::jobs::{Job, JobState};
use crate::rbac::Priority;

/// Next-value counters for identifiers and claim sequence numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub next_user: u64,
    pub next_job: u64,
    pub next_request: u64,
    pub next_claim_sequence: u64,
}

impl Default for Counters {
    fn default() -> Self {
        Counters {
            next_user: 1,
            next_job: 1,
            next_request: 1,
            next_claim_sequence: 1,
        }
    }
}

/// Everything that survives a backup. Sessions are not part of it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistentState {
    pub accounts: BTreeMap<UserId, UserAccount>,
    pub jobs: BTreeMap<JobId, Job>,
    pub requests: BTreeMap<RequestId, PermissionRequest>,
    pub counters: Counters,
}

impl PersistentState {
    pub fn account_by_name(&self, username: &str) -> Option<&UserAccount> {
        self.accounts.values().find(|a| a.username == username)
    }

    pub fn priority_of(&self, user: &UserId) -> Option<Priority> {
        self.accounts
            .get(user)
            .and_then(|a| a.effective_priority().ok())
    }

    pub fn has_admin(&self) -> bool {
        self.accounts.values().any(UserAccount::is_admin)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct State {
    pub persistent: PersistentState,
    pub sessions: BTreeMap<SessionId, Session>,
}

/// An event that does not fit the state it is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {kind} does not apply: {detail}")]
pub struct ApplyError {
    pub kind: &'static str,
    pub detail: String,
}

impl State {
    pub fn apply(&mut self, record: &JournalRecord) -> Result<(), ApplyError> {
        let kind = record.event.kind();
        let fail = |detail: String| ApplyError { kind, detail };
        let p = &mut self.persistent;

        match &record.event {
            Event::AccountCreated { account } => {
                if p.accounts.contains_key(&account.user_id) {
                    return Err(fail(format!("duplicate user id {}", account.user_id)));
                }
                if let Some(n) = account.user_id.counter() {
                    p.counters.next_user = p.counters.next_user.max(n + 1);
                }
                p.accounts.insert(account.user_id.clone(), account.clone());
            }
            Event::RoleAssigned { user_id, role, .. } => {
                let acct = p
                    .accounts
                    .get_mut(user_id)
                    .ok_or_else(|| fail(format!("unknown user {user_id}")))?;
                acct.roles.insert(*role);
            }
            Event::RoleRevoked { user_id, role, .. } => {
                let acct = p
                    .accounts
                    .get_mut(user_id)
                    .ok_or_else(|| fail(format!("unknown user {user_id}")))?;
                if acct.roles.len() == 1 && acct.roles.contains(role) {
                    return Err(fail(format!("would leave {user_id} without roles")));
                }
                acct.roles.remove(role);
            }
            Event::SessionOpened { session } => {
                if !p.accounts.contains_key(&session.user_id) {
                    return Err(fail(format!("unknown user {}", session.user_id)));
                }
                let now = session.login_time;
                self.sessions.retain(|_, s| s.is_live(now));
                self.sessions
                    .insert(session.session_id.clone(), session.clone());
            }
            Event::SessionClosed { session_id } => {
                self.sessions.remove(session_id);
            }
            Event::JobPosted { poster, job, grant } => {
                if p.jobs.contains_key(&job.job_id) {
                    return Err(fail(format!("duplicate job id {}", job.job_id)));
                }
                if let Some(grant) = grant {
                    let req = p
                        .requests
                        .get_mut(grant)
                        .ok_or_else(|| fail(format!("unknown grant {grant}")))?;
                    req.consumed = true;
                }
                p.accounts
                    .get_mut(poster)
                    .ok_or_else(|| fail(format!("unknown poster {poster}")))?
                    .charge_transaction(record.occurred_at);
                if let Some(n) = job.job_id.counter() {
                    p.counters.next_job = p.counters.next_job.max(n + 1);
                }
                p.jobs.insert(job.job_id.clone(), job.clone());
            }
            Event::ClaimSubmitted { claim } => {
                let job = p
                    .jobs
                    .get_mut(&claim.job_id)
                    .ok_or_else(|| fail(format!("unknown job {}", claim.job_id)))?;
                if job.state != JobState::Open || job.pending_claim(&claim.user_id).is_some() {
                    return Err(fail(format!("claim on {} not admissible", claim.job_id)));
                }
                job.claims.push(claim.clone());
                p.accounts
                    .get_mut(&claim.user_id)
                    .ok_or_else(|| fail(format!("unknown claimant {}", claim.user_id)))?
                    .charge_transaction(record.occurred_at);
                p.counters.next_claim_sequence =
                    p.counters.next_claim_sequence.max(claim.sequence + 1);
            }
            Event::ClaimsResolved { job_id, winner, .. } => {
                let job = p
                    .jobs
                    .get_mut(job_id)
                    .ok_or_else(|| fail(format!("unknown job {job_id}")))?;
                if job.state != JobState::Open {
                    return Err(fail(format!("job {job_id} not open")));
                }
                job.state = JobState::Assigned;
                job.claimed_by = Some(winner.clone());
                job.claims.clear();
            }
            Event::JobCompleted { job_id, .. } => {
                let job = p
                    .jobs
                    .get_mut(job_id)
                    .ok_or_else(|| fail(format!("unknown job {job_id}")))?;
                if job.state != JobState::Assigned {
                    return Err(fail(format!("job {job_id} not assigned")));
                }
                job.state = JobState::Completed;
            }
            Event::PermissionRequested { request } => {
                if let Some(n) = request.request_id.counter() {
                    p.counters.next_request = p.counters.next_request.max(n + 1);
                }
                p.requests
                    .insert(request.request_id.clone(), request.clone());
            }
            Event::PermissionApproved {
                request_id,
                approver,
            } => {
                let req = p
                    .requests
                    .get_mut(request_id)
                    .ok_or_else(|| fail(format!("unknown request {request_id}")))?;
                if req.status != RequestStatus::Pending {
                    return Err(fail(format!("request {request_id} already resolved")));
                }
                req.status = RequestStatus::Approved;
                req.approver = Some(approver.clone());
            }
            Event::BackupTaken { .. } => {}
            Event::StateRestored { state, .. } => {
                self.persistent = (**state).clone();
                self.sessions.clear();
            }
        }
        Ok(())
    }

    /// Canonical serialization: ordered maps, fixed field order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("state is always serializable")
    }

    /// Hex SHA-256 of [`State::canonical_bytes`].
    pub fn canonical_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }
}
