#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use jobgate_core::account::HashCost;
use jobgate_core::state::Counters;
use jobgate_core::store::MemoryJournal;
use jobgate_core::time::parse_board;
use jobgate_core::{
    Action, AvailabilityWindow, ClaimRequest, Engine, EngineConfig, Job, JobId, JobState,
    JournalRecord, NewJob, PermissionRequest, PersistentState, Priority, RequestId,
    RequestStatus, Role, SessionToken, Timestamp, TransactionPolicy, UserAccount, UserId,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const PASSWORD: &str = "s3cret-pass";

pub fn config() -> EngineConfig {
    EngineConfig {
        hash_cost: HashCost::MINIMAL,
        snapshot_every: 0,
        ..EngineConfig::default()
    }
}

pub fn config_with_limit(max_per_day: u32) -> EngineConfig {
    EngineConfig {
        policy: TransactionPolicy { max_per_day },
        ..config()
    }
}

pub fn at(s: &str) -> Timestamp {
    parse_board(s).unwrap_or_else(|| panic!("bad fixture time {s}"))
}

pub fn level(n: u8) -> Priority {
    Priority::new(n).unwrap()
}

pub fn new_job(lvl: u8, ty: &str, desc: &str) -> NewJob {
    NewJob {
        target_level: level(lvl),
        job_type: ty.into(),
        description: desc.into(),
        window: None,
    }
}

/// Engine with an admin `ruhi` logged in at `t0`.
pub struct World {
    pub engine: Engine,
    pub journal: MemoryJournal,
    pub admin: SessionToken,
}

impl World {
    pub fn new(t0: Timestamp) -> Self {
        Self::with_config(config(), t0)
    }

    pub fn with_config(cfg: EngineConfig, t0: Timestamp) -> Self {
        let journal = MemoryJournal::new();
        let mut engine = Engine::new(cfg, journal.clone());
        engine.bootstrap_admin("ruhi", PASSWORD, t0).unwrap();
        let admin = engine.login("ruhi", PASSWORD, t0).unwrap().token;
        World {
            engine,
            journal,
            admin,
        }
    }

    /// Creates `name` holding exactly `role` (via self-service plus admin assignment).
    pub fn user(&mut self, name: &str, role: Role, now: Timestamp) -> UserId {
        let acct = self.engine.create_account(name, PASSWORD, now).unwrap();
        if role != Role::Executive {
            self.engine
                .assign_role(&self.admin, name, role, now)
                .unwrap();
            self.engine
                .revoke_role(&self.admin, name, Role::Executive, now)
                .unwrap();
        }
        acct.user_id
    }

    pub fn login(&mut self, name: &str, now: Timestamp) -> SessionToken {
        self.engine.login(name, PASSWORD, now).unwrap().token
    }

    /// Grants `token`'s user a single PostJob approval from the admin.
    pub fn grant_post(&mut self, token: &SessionToken, now: Timestamp) -> RequestId {
        let req = self
            .engine
            .request_permission(token, Action::PostJob, now)
            .unwrap();
        self.engine
            .approve_permission(&self.admin, &req.request_id, now)
            .unwrap();
        req.request_id
    }
}

/// One row of the reference board: poster, role, posted at, level, type, description.
pub const SAMPLE_BOARD: [(&str, Role, &str, u8, &str, &str); 7] = [
    ("ruhi", Role::Admin, "03/02/14 11:50", 1, "jkkk", "bjnjmk"),
    ("sa", Role::President, "02/02/14 17:18", 2, "ggg", "hjhj"),
    ("User1", Role::Manager, "02/02/14 14:07", 4, "xcvxcv", "xvcxcvx"),
    ("tom", Role::Executive, "02/02/14 17:16", 5, "bbbbbb", "cfgkk"),
    ("ccc", Role::Executive, "02/02/14 17:20", 5, "aaaaaa", "ffghj"),
    ("anku", Role::Executive, "03/02/14 11:51", 5, "hunjmk", "ujh"),
    ("ishan", Role::Executive, "03/02/14 11:52", 5, "bh", "hbj"),
];

/// Seeds the seven jobs of the reference board, each posted by its listed user at
/// its listed time. Non-admin posters go through the approval path.
pub fn sample_board_world() -> World {
    let setup = at("02/02/14 09:00");
    let mut w = World::new(setup);
    for (name, role, ..) in SAMPLE_BOARD.iter().skip(1) {
        w.user(name, *role, setup);
    }
    let mut rows = SAMPLE_BOARD.to_vec();
    rows.sort_by_key(|r| at(r.2));
    for (name, role, when, lvl, ty, desc) in rows {
        let t = at(when);
        let token = w.login(name, t);
        if role != Role::Admin {
            let admin = w.login("ruhi", t);
            w.admin = admin;
            w.grant_post(&token, t);
        }
        w.engine.post_job(&token, new_job(lvl, ty, desc), t).unwrap();
    }
    w.admin = w.login("ruhi", at("03/02/14 12:00"));
    w
}

/// Reference winner: sort the whole contender list and take the head.
pub fn brute_force_winner(mut keys: Vec<(Priority, Timestamp, UserId)>) -> Option<UserId> {
    keys.sort();
    keys.into_iter().next().map(|(_, _, u)| u)
}

fn random_text(rng: &mut StdRng, max: usize) -> String {
    const ALPHABET: &[char] = &[
        'a', 'b', 'z', 'Q', '0', '9', ' ', '<', '>', '&', '"', '\'', '\n', '\t', 'é', '漢', '-', '/', ';',
    ];
    let n = rng.gen_range(1..=max);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

fn random_time(rng: &mut StdRng) -> Timestamp {
    at("01/01/14 00:00") + Duration::milliseconds(rng.gen_range(0..400 * 86_400_000i64))
}

/// A structurally valid persistent state with arbitrary contents.
pub fn random_state(rng: &mut StdRng) -> PersistentState {
    let n_users = rng.gen_range(0..8u64);
    let mut accounts = BTreeMap::new();
    for i in 1..=n_users {
        let mut roles = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=3) {
            roles.insert(*Role::ALL.choose(rng).unwrap());
        }
        let user_id = UserId::from_counter(i);
        accounts.insert(
            user_id.clone(),
            UserAccount {
                user_id,
                username: format!("user{i}{}", rng.gen_range(0..1000)),
                credential: format!("$argon2id$v=19$m=8,t=1,p=1${}", rng.gen::<u64>()),
                roles,
                tx_day: rng
                    .gen_bool(0.5)
                    .then(|| NaiveDate::from_ymd_opt(2014, 2, rng.gen_range(1..=28)).unwrap()),
                tx_count: rng.gen_range(0..60),
                created_at: random_time(rng),
            },
        );
    }
    let user_ids: Vec<UserId> = accounts.keys().cloned().collect();
    let mut seq = 1;
    let mut jobs = BTreeMap::new();
    for i in 1..=rng.gen_range(0..10u64) {
        let job_id = JobId::from_counter(i);
        let state = *[JobState::Open, JobState::Assigned, JobState::Completed]
            .choose(rng)
            .unwrap();
        let claimed_by = match state {
            JobState::Open => None,
            _ => Some(
                user_ids
                    .choose(rng)
                    .cloned()
                    .unwrap_or_else(|| UserId::from_counter(99)),
            ),
        };
        let mut claims = vec![];
        if state == JobState::Open {
            let mut claimants = user_ids.clone();
            claimants.shuffle(rng);
            for u in claimants.into_iter().take(rng.gen_range(0..4)) {
                claims.push(ClaimRequest {
                    job_id: job_id.clone(),
                    user_id: u,
                    login_time: random_time(rng),
                    submitted_at: random_time(rng),
                    sequence: seq,
                });
                seq += 1;
            }
        }
        let window = rng.gen_bool(0.4).then(|| {
            let a = random_time(rng);
            let b = random_time(rng);
            AvailabilityWindow::new(a.min(b), a.max(b)).unwrap()
        });
        jobs.insert(
            job_id.clone(),
            Job {
                job_id,
                assigned_by: random_text(rng, 12),
                assigned_on: random_time(rng),
                target_level: level(rng.gen_range(1..=5)),
                job_type: random_text(rng, 10),
                description: if rng.gen_bool(0.2) {
                    String::new()
                } else {
                    random_text(rng, 40)
                },
                window,
                state,
                claimed_by,
                claims,
            },
        );
    }
    let mut requests = BTreeMap::new();
    for i in 1..=rng.gen_range(0..5u64) {
        let status = *[RequestStatus::Pending, RequestStatus::Approved, RequestStatus::Denied]
            .choose(rng)
            .unwrap();
        let request_id = RequestId::from_counter(i);
        requests.insert(
            request_id.clone(),
            PermissionRequest {
                request_id,
                requester: UserId::from_counter(rng.gen_range(1..9)),
                action: *Action::ALL.choose(rng).unwrap(),
                status,
                approver: (status != RequestStatus::Pending)
                    .then(|| UserId::from_counter(rng.gen_range(1..9))),
                requested_at: random_time(rng),
                consumed: status == RequestStatus::Approved && rng.gen_bool(0.5),
            },
        );
    }
    PersistentState {
        counters: Counters {
            next_user: n_users + 1 + rng.gen_range(0..3),
            next_job: jobs.len() as u64 + 1,
            next_request: requests.len() as u64 + 1,
            next_claim_sequence: seq + rng.gen_range(0..5),
        },
        accounts,
        jobs,
        requests,
    }
}

/// Drives an engine through `steps` random operations (many of which fail
/// authorization, which is fine) and returns the journal it produced.
pub fn random_journal(rng: &mut StdRng, steps: usize) -> Vec<JournalRecord> {
    let mut now = at("02/02/14 08:00");
    let mut w = World::with_config(config_with_limit(rng.gen_range(2..6)), now);
    let mut names = vec!["ruhi".to_owned()];
    let mut tokens: Vec<SessionToken> = vec![w.admin.clone()];
    for step in 0..steps {
        now += Duration::milliseconds(rng.gen_range(0..3_600_000));
        let token = tokens.choose(rng).unwrap().clone();
        let job = JobId::from_counter(rng.gen_range(1..6));
        match rng.gen_range(0..10) {
            0 => {
                let name = format!("u{step}");
                if w.engine.create_account(&name, PASSWORD, now).is_ok() {
                    names.push(name);
                }
            }
            1 => {
                let name = names.choose(rng).unwrap().clone();
                if let Ok(l) = w.engine.login(&name, PASSWORD, now) {
                    tokens.push(l.token);
                }
            }
            2 => {
                let name = names.choose(rng).unwrap();
                let _ = w
                    .engine
                    .assign_role(&w.admin, name, *Role::ALL[1..].choose(rng).unwrap(), now);
            }
            3 => {
                let mut nj = new_job(rng.gen_range(1..=5), "t", "d");
                if rng.gen_bool(0.3) {
                    nj.window = AvailabilityWindow::new(now, now + Duration::hours(2));
                }
                let _ = w.engine.post_job(&token, nj, now);
            }
            4 | 5 => {
                let _ = w.engine.submit_claim(&token, &job, now);
            }
            6 => {
                let _ = w.engine.resolve_claims(&w.admin, &job, now);
            }
            7 => {
                let _ = w.engine.complete_job(&token, &job, now);
            }
            8 => {
                if let Ok(r) = w.engine.request_permission(&token, Action::PostJob, now) {
                    let approver = tokens.choose(rng).unwrap().clone();
                    let _ = w.engine.approve_permission(&approver, &r.request_id, now);
                }
            }
            _ => {
                w.admin = w.login("ruhi", now);
                tokens.push(w.admin.clone());
            }
        }
    }
    w.journal.records()
}
