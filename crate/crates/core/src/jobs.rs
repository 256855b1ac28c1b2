//! Job board types, claim ordering and transaction policy.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::ids::{JobId, UserId};
use crate::rbac::Priority;
use crate::time::Timestamp;

pub const MAX_JOB_TYPE_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilityWindow {
    pub opens_at: Timestamp,
    pub closes_at: Timestamp,
}

impl AvailabilityWindow {
    pub fn new(opens_at: Timestamp, closes_at: Timestamp) -> Option<Self> {
        (opens_at <= closes_at).then_some(AvailabilityWindow { opens_at, closes_at })
    }

    /// Both ends inclusive.
    pub fn contains(&self, now: Timestamp) -> bool {
        self.opens_at <= now && now <= self.closes_at
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobState {
    Open,
    Assigned,
    Completed,
}

impl JobState {
    pub fn as_str(self) -> &'static str {
        match self {
            JobState::Open => "Open",
            JobState::Assigned => "Assigned",
            JobState::Completed => "Completed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: JobId,
    /// Username of the poster.
    pub assigned_by: String,
    pub assigned_on: Timestamp,
    pub target_level: Priority,
    pub job_type: String,
    pub description: String,
    pub window: Option<AvailabilityWindow>,
    pub state: JobState,
    pub claimed_by: Option<UserId>,
    /// Claims admitted and not yet resolved, in admission order.
    pub claims: Vec<ClaimRequest>,
}

impl Job {
    pub fn is_available(&self, now: Timestamp) -> bool {
        is_available(self, now)
    }

    pub fn pending_claim(&self, user: &UserId) -> Option<&ClaimRequest> {
        self.claims.iter().find(|c| &c.user_id == user)
    }

    /// Sort key of the job board.
    pub fn board_key(&self) -> (Priority, Timestamp, &JobId) {
        (self.target_level, self.assigned_on, &self.job_id)
    }
}

/// True iff the job has no window or `now` falls inside it.
pub fn is_available(job: &Job, now: Timestamp) -> bool {
    job.window.is_none_or(|w| w.contains(now))
}

/// Orders jobs by (target level, posted at, job id).
pub fn sort_board(jobs: &mut [Job]) {
    jobs.sort_by(|a, b| a.board_key().cmp(&b.board_key()));
}

/// Fields supplied by the poster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewJob {
    pub target_level: Priority,
    pub job_type: String,
    pub description: String,
    pub window: Option<AvailabilityWindow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRequest {
    pub job_id: JobId,
    pub user_id: UserId,
    /// Copied from the claimant's session when the claim was admitted.
    pub login_time: Timestamp,
    pub submitted_at: Timestamp,
    pub sequence: u64,
}

/// Resolution order of a contender: priority first, then who logged in
/// first, then user id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClaimKey {
    pub priority: Priority,
    pub login_time: Timestamp,
    pub user_id: UserId,
}

impl ClaimKey {
    pub fn new(priority: Priority, claim: &ClaimRequest) -> Self {
        ClaimKey {
            priority,
            login_time: claim.login_time,
            user_id: claim.user_id.clone(),
        }
    }
}

/// Picks the winning claim. `priority_of` supplies each claimant's
/// current effective priority; claimants it cannot rank are skipped.
pub fn select_winner<F>(claims: &[ClaimRequest], mut priority_of: F) -> Option<&ClaimRequest>
where
    F: FnMut(&UserId) -> Option<Priority>,
{
    claims
        .iter()
        .filter_map(|c| priority_of(&c.user_id).map(|p| (ClaimKey::new(p, c), c)))
        .min_by(|(a, _), (b, _)| a.cmp(b))
        .map(|(_, c)| c)
}

/// Claims sorted into the order they would win in.
pub fn rank_claims<F>(claims: &[ClaimRequest], mut priority_of: F) -> Vec<ClaimRequest>
where
    F: FnMut(&UserId) -> Option<Priority>,
{
    let mut keyed: Vec<_> = claims
        .iter()
        .map(|c| (priority_of(&c.user_id), c))
        .collect();
    keyed.sort_by(|(pa, a), (pb, b)| match (pa, pb) {
        (Some(pa), Some(pb)) => ClaimKey::new(*pa, a).cmp(&ClaimKey::new(*pb, b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.sequence.cmp(&b.sequence),
    });
    keyed.into_iter().map(|(_, c)| c.clone()).collect()
}

/// Daily cap on counted actions (claims and posts) per user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionPolicy {
    pub max_per_day: u32,
}

impl TransactionPolicy {
    pub const DEFAULT_MAX_PER_DAY: u32 = 50;

    pub fn permits(&self, used_today: u32) -> bool {
        used_today < self.max_per_day
    }
}

impl Default for TransactionPolicy {
    fn default() -> Self {
        TransactionPolicy {
            max_per_day: Self::DEFAULT_MAX_PER_DAY,
        }
    }
}
