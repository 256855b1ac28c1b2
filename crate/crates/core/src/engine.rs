//! The engine: the single writer over [`State`].
//!
//! Every mutating operation follows the same path: authenticate the caller,
//! gather facts and cross-check them against the authorization matrix,
//! build the event, append it to the journal, and only then fold it into
//! the in-memory state. A failed append leaves the state untouched.

use std::path::{Path, PathBuf};

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::account::{
    hash_password, verify_password, HashCost, Session, SessionId, SessionToken, UserAccount,
    MIN_PASSWORD_LEN,
};
use crate::approval::{PermissionRequest, RequestStatus};
use crate::error::EngineError;
use crate::event::{Event, JournalRecord};
use crate::ids::{JobId, RequestId, UserId};
use crate::jobs::{rank_claims, select_winner, sort_board, ClaimRequest, Job, JobState, NewJob, TransactionPolicy, MAX_JOB_TYPE_LEN};
use crate::rbac::{cross_check, Action, Decision, DenyReason, Facts, GrantState, Priority, Role, RoleSet};
use crate::state::State;
use crate::store::{BackupDocument, DataDir, Journal};
use crate::time::{to_millis, Timestamp};

pub const MAX_USERNAME_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Session lifetime in seconds.
    pub session_ttl_secs: i64,
    pub policy: TransactionPolicy,
    pub hash_cost: HashCost,
    /// Write a snapshot every this many events; 0 disables.
    pub snapshot_every: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            session_ttl_secs: 8 * 60 * 60,
            policy: TransactionPolicy::default(),
            hash_cost: HashCost::default(),
            snapshot_every: 1000,
        }
    }
}

impl EngineConfig {
    pub fn session_ttl(&self) -> Duration {
        Duration::seconds(self.session_ttl_secs)
    }
}

/// What the caller wants to do, plus the objects it touches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessRequest {
    pub action: Action,
    pub target_level: Option<Priority>,
    pub job: Option<JobId>,
    pub request: Option<RequestId>,
}

impl AccessRequest {
    pub fn new(action: Action) -> Self {
        AccessRequest {
            action,
            target_level: None,
            job: None,
            request: None,
        }
    }

    pub fn on_job(action: Action, job: JobId) -> Self {
        AccessRequest {
            job: Some(job),
            ..Self::new(action)
        }
    }

    pub fn on_request(action: Action, request: RequestId) -> Self {
        AccessRequest {
            request: Some(request),
            ..Self::new(action)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Login {
    pub token: SessionToken,
    pub session: Session,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub job_id: JobId,
    pub winner: UserId,
    /// All contenders in the order they ranked, winner first.
    pub ranking: Vec<ClaimRequest>,
}

pub struct Engine {
    state: State,
    last_sequence: u64,
    journal: Box<dyn Journal>,
    config: EngineConfig,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("last_sequence", &self.last_sequence)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(config: EngineConfig, journal: impl Journal + 'static) -> Self {
        Self::from_state(config, State::default(), 0, journal)
    }

    pub fn from_state(config: EngineConfig, state: State, last_sequence: u64, journal: impl Journal + 'static) -> Self {
        Engine {
            state,
            last_sequence,
            journal: Box::new(journal),
            config,
        }
    }

    /// Opens (or creates) a data directory and rebuilds state from it.
    pub fn open(dir: impl Into<PathBuf>, config: EngineConfig, sync: bool) -> Result<Self, EngineError> {
        let dir = DataDir::open(dir)?;
        let (state, seq) = dir.load()?;
        let journal = dir.into_journal(sync)?;
        Ok(Self::from_state(config, state, seq, journal))
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn last_sequence(&self) -> u64 {
        self.last_sequence
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn snapshot(&mut self) -> Result<(), EngineError> {
        self.journal
            .snapshot(&self.state, self.last_sequence)
            .map_err(Into::into)
    }

    fn commit(&mut self, at: Timestamp, event: Event) -> Result<u64, EngineError> {
        let record = JournalRecord {
            sequence: self.last_sequence + 1,
            occurred_at: at,
            event,
        };
        self.journal.append(&record)?;
        self.last_sequence = record.sequence;
        self.state.apply(&record).map_err(crate::store::StoreError::from)?;
        if self.config.snapshot_every > 0 && record.sequence.is_multiple_of(self.config.snapshot_every) {
            // the journal already holds the event; a failed snapshot only
            // costs a longer replay next start
            let _ = self.journal.snapshot(&self.state, record.sequence);
        }
        Ok(record.sequence)
    }

    // ---- lookups ----

    pub fn account(&self, user: &UserId) -> Option<&UserAccount> {
        self.state.persistent.accounts.get(user)
    }

    /// Finds an account by user id or, failing that, by username.
    pub fn find_account(&self, key: &str) -> Option<&UserAccount> {
        let p = &self.state.persistent;
        p.accounts
            .get(&UserId::from(key))
            .or_else(|| p.account_by_name(key))
    }

    pub fn job(&self, job: &JobId) -> Option<&Job> {
        self.state.persistent.jobs.get(job)
    }

    pub fn permission_request(&self, id: &RequestId) -> Option<&PermissionRequest> {
        self.state.persistent.requests.get(id)
    }

    // ---- identity ----

    pub fn create_account(&mut self, username: &str, password: &str, now: Timestamp) -> Result<UserAccount, EngineError> {
        self.new_account(username, password, [Role::Executive].into(), now)
    }

    /// Creates the first Admin. Fails with `AlreadyInitialized` once any admin exists.
    pub fn bootstrap_admin(&mut self, username: &str, password: &str, now: Timestamp) -> Result<UserAccount, EngineError> {
        if self.state.persistent.has_admin() {
            return Err(EngineError::AlreadyInitialized);
        }
        self.new_account(username, password, [Role::Admin].into(), now)
    }

    fn new_account(&mut self, username: &str, password: &str, roles: RoleSet, now: Timestamp) -> Result<UserAccount, EngineError> {
        let now = to_millis(now);
        validate_username(username)?;
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(EngineError::WeakPassword {
                min: MIN_PASSWORD_LEN,
            });
        }
        if self.state.persistent.account_by_name(username).is_some() {
            return Err(EngineError::DuplicateUsername(username.to_owned()));
        }
        let account = UserAccount {
            user_id: UserId::from_counter(self.state.persistent.counters.next_user),
            username: username.to_owned(),
            credential: hash_password(password, self.config.hash_cost),
            roles,
            tx_day: None,
            tx_count: 0,
            created_at: now,
        };
        self.commit(
            now,
            Event::AccountCreated {
                account: account.clone(),
            },
        )?;
        Ok(account)
    }

    /// Opens a session; its login time is the FCFS key for later claims.
    pub fn login(&mut self, username: &str, password: &str, now: Timestamp) -> Result<Login, EngineError> {
        let now = to_millis(now);
        let user_id = match self.state.persistent.account_by_name(username) {
            Some(acct) if verify_password(password, &acct.credential) => acct.user_id.clone(),
            Some(_) => return Err(EngineError::BadCredentials),
            None => {
                // same work as a real check so timing does not reveal unknown users
                let _ = hash_password(password, self.config.hash_cost);
                return Err(EngineError::BadCredentials);
            }
        };
        let token = SessionToken::generate();
        let session = Session {
            session_id: SessionId::of(&token),
            user_id,
            login_time: now,
            expires_at: now + self.config.session_ttl(),
        };
        self.commit(
            now,
            Event::SessionOpened {
                session: session.clone(),
            },
        )?;
        Ok(Login { token, session })
    }

    pub fn authenticate(&self, token: &SessionToken, now: Timestamp) -> Result<&Session, EngineError> {
        let session = self
            .state
            .sessions
            .get(&SessionId::of(token))
            .ok_or(EngineError::UnknownToken)?;
        if !session.is_live(now) {
            return Err(EngineError::SessionExpired);
        }
        Ok(session)
    }

    pub fn logout(&mut self, token: &SessionToken, now: Timestamp) -> Result<(), EngineError> {
        let session_id = SessionId::of(token);
        if !self.state.sessions.contains_key(&session_id) {
            return Err(EngineError::UnknownToken);
        }
        self.commit(to_millis(now), Event::SessionClosed { session_id })?;
        Ok(())
    }

    fn caller(&self, token: &SessionToken, now: Timestamp) -> Result<(&Session, &UserAccount), EngineError> {
        let session = self.authenticate(token, now)?;
        let account = self
            .account(&session.user_id)
            .ok_or(EngineError::UnknownToken)?;
        Ok((session, account))
    }

    // ---- authorization ----

    fn post_grant(&self, user: &UserId) -> (GrantState, Option<RequestId>) {
        let mut state = GrantState::None;
        for req in self.state.persistent.requests.values() {
            if &req.requester != user || req.action != Action::PostJob {
                continue;
            }
            if req.is_live_grant(Action::PostJob) {
                return (GrantState::Approved, Some(req.request_id.clone()));
            }
            if req.status == RequestStatus::Pending {
                state = GrantState::Pending;
            }
        }
        (state, None)
    }

    fn facts(&self, account: &UserAccount, req: &AccessRequest, now: Timestamp) -> Facts {
        let p = &self.state.persistent;
        let job = req.job.as_ref().and_then(|id| p.jobs.get(id));
        Facts {
            target_level: job.map(|j| j.target_level).or(req.target_level),
            window_open: job.is_none_or(|j| j.is_available(now)),
            under_limit: self
                .config
                .policy
                .permits(account.transactions_on(now)),
            post_grant: self.post_grant(&account.user_id).0,
            requester: req
                .request
                .as_ref()
                .and_then(|id| p.requests.get(id))
                .and_then(|r| p.priority_of(&r.requester)),
            is_assignee: job.is_some_and(|j| j.claimed_by.as_ref() == Some(&account.user_id)),
        }
    }

    /// Cross-checks a request. Unknown or expired tokens yield `Deny(SessionExpired)`.
    pub fn authorize_request(&self, token: &SessionToken, req: &AccessRequest, now: Timestamp) -> Decision {
        match self.caller(token, now) {
            Ok((_, account)) => cross_check(&account.roles, req.action, &self.facts(account, req, now)),
            Err(_) => Decision::Deny(DenyReason::SessionExpired),
        }
    }

    pub fn authorize(&self, token: &SessionToken, action: Action, target_level: Option<Priority>, now: Timestamp) -> Decision {
        let req = AccessRequest {
            target_level,
            ..AccessRequest::new(action)
        };
        self.authorize_request(token, &req, now)
    }

    fn check(&self, account: &UserAccount, req: &AccessRequest, now: Timestamp) -> Result<(), EngineError> {
        cross_check(&account.roles, req.action, &self.facts(account, req, now))
            .into_result()
            .map_err(EngineError::Denied)
    }

    // ---- role administration ----

    pub fn assign_role(&mut self, token: &SessionToken, target: &str, role: Role, now: Timestamp) -> Result<UserAccount, EngineError> {
        let now = to_millis(now);
        let (_, actor) = self.caller(token, now)?;
        self.check(actor, &AccessRequest::new(Action::AssignRole), now)?;
        let actor = actor.user_id.clone();
        let user_id = self
            .find_account(target)
            .ok_or_else(|| EngineError::UnknownUser(target.to_owned()))?
            .user_id
            .clone();
        self.commit(
            now,
            Event::RoleAssigned {
                actor,
                user_id: user_id.clone(),
                role,
            },
        )?;
        Ok(self.state.persistent.accounts[&user_id].clone())
    }

    pub fn revoke_role(&mut self, token: &SessionToken, target: &str, role: Role, now: Timestamp) -> Result<UserAccount, EngineError> {
        let now = to_millis(now);
        let (_, actor) = self.caller(token, now)?;
        self.check(actor, &AccessRequest::new(Action::RevokeRole), now)?;
        let actor = actor.user_id.clone();
        let account = self
            .find_account(target)
            .ok_or_else(|| EngineError::UnknownUser(target.to_owned()))?;
        if account.roles.len() == 1 && account.roles.contains(&role) {
            return Err(EngineError::LastRole(account.username.clone()));
        }
        let user_id = account.user_id.clone();
        self.commit(
            now,
            Event::RoleRevoked {
                actor,
                user_id: user_id.clone(),
                role,
            },
        )?;
        Ok(self.state.persistent.accounts[&user_id].clone())
    }

    // ---- approvals ----

    pub fn request_permission(&mut self, token: &SessionToken, action: Action, now: Timestamp) -> Result<PermissionRequest, EngineError> {
        let now = to_millis(now);
        let (_, account) = self.caller(token, now)?;
        self.check(account, &AccessRequest::new(Action::RequestPermission), now)?;
        let request = PermissionRequest {
            request_id: RequestId::from_counter(self.state.persistent.counters.next_request),
            requester: account.user_id.clone(),
            action,
            status: RequestStatus::Pending,
            approver: None,
            requested_at: now,
            consumed: false,
        };
        self.commit(
            now,
            Event::PermissionRequested {
                request: request.clone(),
            },
        )?;
        Ok(request)
    }

    /// Approves a pending request. The approver must strictly outrank the requester.
    pub fn approve_permission(&mut self, token: &SessionToken, request_id: &RequestId, now: Timestamp) -> Result<PermissionRequest, EngineError> {
        let now = to_millis(now);
        let (_, approver) = self.caller(token, now)?;
        let request = self
            .permission_request(request_id)
            .ok_or_else(|| EngineError::UnknownRequest(request_id.clone()))?;
        if request.status != RequestStatus::Pending {
            return Err(EngineError::AlreadyResolved(request_id.clone()));
        }
        self.check(
            approver,
            &AccessRequest::on_request(Action::ApprovePermission, request_id.clone()),
            now,
        )?;
        let approver = approver.user_id.clone();
        self.commit(
            now,
            Event::PermissionApproved {
                request_id: request_id.clone(),
                approver,
            },
        )?;
        Ok(self.state.persistent.requests[request_id].clone())
    }

    /// Pending permission requests an approver could act on, oldest first.
    pub fn approvable_requests(&self, token: &SessionToken, now: Timestamp) -> Result<Vec<PermissionRequest>, EngineError> {
        let (_, account) = self.caller(token, now)?;
        let mine = account.effective_priority()?;
        let p = &self.state.persistent;
        Ok(p.requests
            .values()
            .filter(|r| r.status == RequestStatus::Pending)
            .filter(|r| p.priority_of(&r.requester).is_some_and(|them| mine.outranks(them)))
            .cloned()
            .collect())
    }

    // ---- job board ----

    pub fn post_job(&mut self, token: &SessionToken, new: NewJob, now: Timestamp) -> Result<Job, EngineError> {
        let now = to_millis(now);
        let (_, poster) = self.caller(token, now)?;
        validate_job(&new)?;
        let req = AccessRequest {
            target_level: Some(new.target_level),
            ..AccessRequest::new(Action::PostJob)
        };
        self.check(poster, &req, now)?;
        let grant = if poster.is_admin() {
            None
        } else {
            self.post_grant(&poster.user_id).1
        };
        let job = Job {
            job_id: JobId::from_counter(self.state.persistent.counters.next_job),
            assigned_by: poster.username.clone(),
            assigned_on: now,
            target_level: new.target_level,
            job_type: new.job_type,
            description: new.description,
            window: new.window,
            state: JobState::Open,
            claimed_by: None,
            claims: vec![],
        };
        let poster = poster.user_id.clone();
        self.commit(
            now,
            Event::JobPosted {
                poster,
                job: job.clone(),
                grant,
            },
        )?;
        Ok(job)
    }

    /// The board as the caller may see it. Admins see every job with its
    /// pending claims ranked; everyone else sees open, currently available
    /// jobs at exactly their level, without other users' claims.
    pub fn list_jobs(&self, token: &SessionToken, now: Timestamp) -> Result<Vec<Job>, EngineError> {
        let (_, account) = self.caller(token, now)?;
        self.check(account, &AccessRequest::new(Action::ListJobs), now)?;
        let p = &self.state.persistent;
        let mut jobs: Vec<Job> = if account.is_admin() {
            p.jobs
                .values()
                .map(|j| Job {
                    claims: rank_claims(&j.claims, |u| p.priority_of(u)),
                    ..j.clone()
                })
                .collect()
        } else {
            let level = account.effective_priority()?;
            p.jobs
                .values()
                .filter(|j| j.state == JobState::Open && j.target_level == level && j.is_available(now))
                .map(|j| Job {
                    claims: j
                        .claims
                        .iter()
                        .filter(|c| c.user_id == account.user_id)
                        .cloned()
                        .collect(),
                    ..j.clone()
                })
                .collect()
        };
        sort_board(&mut jobs);
        Ok(jobs)
    }

    pub fn submit_claim(&mut self, token: &SessionToken, job_id: &JobId, now: Timestamp) -> Result<ClaimRequest, EngineError> {
        let now = to_millis(now);
        let (session, account) = self.caller(token, now)?;
        let job = self
            .job(job_id)
            .ok_or_else(|| EngineError::UnknownJob(job_id.clone()))?;
        if job.state != JobState::Open {
            return Err(EngineError::JobNotOpen(job_id.clone()));
        }
        if job.pending_claim(&account.user_id).is_some() {
            return Err(EngineError::DuplicateClaim(job_id.clone()));
        }
        self.check(account, &AccessRequest::on_job(Action::ClaimJob, job_id.clone()), now)?;
        let claim = ClaimRequest {
            job_id: job_id.clone(),
            user_id: account.user_id.clone(),
            login_time: session.login_time,
            submitted_at: now,
            sequence: self.state.persistent.counters.next_claim_sequence,
        };
        self.commit(
            now,
            Event::ClaimSubmitted {
                claim: claim.clone(),
            },
        )?;
        Ok(claim)
    }

    /// Pending claims on a job in resolution order. Admin only.
    pub fn pending_claims(&self, token: &SessionToken, job_id: &JobId, now: Timestamp) -> Result<Vec<ClaimRequest>, EngineError> {
        let (_, account) = self.caller(token, now)?;
        self.check(account, &AccessRequest::on_job(Action::ResolveClaims, job_id.clone()), now)?;
        let job = self
            .job(job_id)
            .ok_or_else(|| EngineError::UnknownJob(job_id.clone()))?;
        let p = &self.state.persistent;
        Ok(rank_claims(&job.claims, |u| p.priority_of(u)))
    }

    /// Assigns the job to the best-ranked pending claim; the rest are dropped.
    pub fn resolve_claims(&mut self, token: &SessionToken, job_id: &JobId, now: Timestamp) -> Result<Resolution, EngineError> {
        let now = to_millis(now);
        let (_, actor) = self.caller(token, now)?;
        self.check(actor, &AccessRequest::on_job(Action::ResolveClaims, job_id.clone()), now)?;
        let job = self
            .job(job_id)
            .ok_or_else(|| EngineError::UnknownJob(job_id.clone()))?;
        if job.state != JobState::Open {
            return Err(EngineError::JobNotOpen(job_id.clone()));
        }
        let p = &self.state.persistent;
        let winner = select_winner(&job.claims, |u| p.priority_of(u))
            .ok_or_else(|| EngineError::NoClaims(job_id.clone()))?
            .user_id
            .clone();
        let ranking = rank_claims(&job.claims, |u| p.priority_of(u));
        let actor = actor.user_id.clone();
        self.commit(
            now,
            Event::ClaimsResolved {
                actor,
                job_id: job_id.clone(),
                winner: winner.clone(),
            },
        )?;
        Ok(Resolution {
            job_id: job_id.clone(),
            winner,
            ranking,
        })
    }

    /// Resolves every open job that has claims. Jobs without claims are skipped.
    pub fn resolve_all(&mut self, token: &SessionToken, now: Timestamp) -> Result<Vec<Resolution>, EngineError> {
        let (_, actor) = self.caller(token, now)?;
        self.check(actor, &AccessRequest::new(Action::ResolveClaims), now)?;
        let pending: Vec<JobId> = self
            .state
            .persistent
            .jobs
            .values()
            .filter(|j| j.state == JobState::Open && !j.claims.is_empty())
            .map(|j| j.job_id.clone())
            .collect();
        pending
            .iter()
            .map(|id| self.resolve_claims(token, id, now))
            .collect()
    }

    pub fn complete_job(&mut self, token: &SessionToken, job_id: &JobId, now: Timestamp) -> Result<Job, EngineError> {
        let now = to_millis(now);
        let (_, account) = self.caller(token, now)?;
        let job = self
            .job(job_id)
            .ok_or_else(|| EngineError::UnknownJob(job_id.clone()))?;
        if job.state != JobState::Assigned {
            return Err(EngineError::JobNotAssigned(job_id.clone()));
        }
        self.check(account, &AccessRequest::on_job(Action::CompleteJob, job_id.clone()), now)?;
        let actor = account.user_id.clone();
        self.commit(
            now,
            Event::JobCompleted {
                actor,
                job_id: job_id.clone(),
            },
        )?;
        Ok(self.state.persistent.jobs[job_id].clone())
    }

    // ---- backup / restore ----

    pub fn backup(&mut self, token: &SessionToken, path: &Path, now: Timestamp) -> Result<BackupDocument, EngineError> {
        let now = to_millis(now);
        let (_, actor) = self.caller(token, now)?;
        self.check(actor, &AccessRequest::new(Action::Backup), now)?;
        let actor = actor.user_id.clone();
        let doc = BackupDocument::new(self.state.persistent.clone(), now);
        doc.write_to(path)?;
        self.commit(
            now,
            Event::BackupTaken {
                actor,
                location: path.display().to_string(),
                taken_at: now,
            },
        )?;
        Ok(doc)
    }

    /// Replaces the persistent state with a backup. Every session,
    /// including the caller's, ends.
    pub fn restore(&mut self, token: &SessionToken, path: &Path, now: Timestamp) -> Result<BackupDocument, EngineError> {
        let now = to_millis(now);
        let (_, actor) = self.caller(token, now)?;
        self.check(actor, &AccessRequest::new(Action::Restore), now)?;
        let actor = actor.user_id.clone();
        let doc = BackupDocument::read_from(path)?;
        self.commit(
            now,
            Event::StateRestored {
                actor,
                state: Box::new(doc.state.clone()),
            },
        )?;
        Ok(doc)
    }
}

fn validate_username(name: &str) -> Result<(), EngineError> {
    let invalid = |why: &str| Err(EngineError::InvalidUsername(why.to_owned()));
    if name.is_empty() {
        return invalid("empty");
    }
    if name.chars().count() > MAX_USERNAME_LEN {
        return invalid("too long");
    }
    if name.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return invalid("contains whitespace or control characters");
    }
    Ok(())
}

fn validate_job(job: &NewJob) -> Result<(), EngineError> {
    let invalid = |why: &str| Err(EngineError::InvalidJob(why.to_owned()));
    if job.job_type.trim().is_empty() {
        return invalid("job type is empty");
    }
    if job.job_type.chars().count() > MAX_JOB_TYPE_LEN {
        return invalid("job type is too long");
    }
    let bad_char = |c: char| c.is_control() && c != '\n' && c != '\t';
    if job.job_type.chars().any(|c| c.is_control()) || job.description.chars().any(bad_char) {
        return invalid("control characters are not allowed");
    }
    if let Some(w) = job.window {
        if w.opens_at > w.closes_at {
            return invalid("window opens after it closes");
        }
    }
    Ok(())
}
