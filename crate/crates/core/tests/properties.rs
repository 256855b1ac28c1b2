mod common;

use std::collections::BTreeSet;

use chrono::Duration;
use common::*;
use jobgate_core::jobs::{select_winner, sort_board, ClaimRequest};
use jobgate_core::rbac::{cross_check, effective_priority, Facts, GrantState};
use jobgate_core::store::{replay, BackupDocument};
use jobgate_core::{
    Action, AvailabilityWindow, JobId, JobState, Priority, RequestStatus, Role, UserId,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn role() -> impl Strategy<Value = Role> {
    prop::sample::select(Role::ALL.to_vec())
}

fn action() -> impl Strategy<Value = Action> {
    prop::sample::select(Action::ALL.to_vec())
}

fn facts() -> impl Strategy<Value = Facts> {
    (
        prop::option::of(1u8..=5),
        any::<bool>(),
        any::<bool>(),
        prop::sample::select(vec![GrantState::None, GrantState::Pending, GrantState::Approved]),
        prop::option::of(1u8..=5),
        any::<bool>(),
    )
        .prop_map(|(lvl, window_open, under_limit, post_grant, req, is_assignee)| Facts {
            target_level: lvl.map(level),
            window_open,
            under_limit,
            post_grant,
            requester: req.map(level),
            is_assignee,
        })
}

/// (user counter, priority, login offset in seconds)
fn claim_set() -> impl Strategy<Value = Vec<(u64, u8, i64)>> {
    prop::collection::vec((1u64..40, 1u8..=5, 0i64..20), 1..=20).prop_map(|mut v| {
        // one pending claim per user
        let mut seen = BTreeSet::new();
        v.retain(|(u, ..)| seen.insert(*u));
        v
    })
}

fn claims_of(set: &[(u64, u8, i64)]) -> Vec<ClaimRequest> {
    let base = at("02/02/14 17:00");
    set.iter()
        .enumerate()
        .map(|(i, (u, _, off))| ClaimRequest {
            job_id: JobId::from_counter(1),
            user_id: UserId::from_counter(*u),
            login_time: base + Duration::seconds(*off),
            submitted_at: base + Duration::seconds(100),
            sequence: i as u64 + 1,
        })
        .collect()
}

proptest! {
    #[test]
    fn effective_priority_ignores_order_and_duplicates(roles in prop::collection::vec(role(), 1..8)) {
        let mut shuffled = roles.clone();
        shuffled.reverse();
        shuffled.extend(roles.iter().copied());
        let set: BTreeSet<Role> = roles.iter().copied().collect();
        let p = effective_priority(&roles).unwrap();
        prop_assert_eq!(p, effective_priority(&shuffled).unwrap());
        prop_assert_eq!(p, effective_priority(&set).unwrap());
        prop_assert_eq!(p, roles.iter().map(|r| r.priority()).min().unwrap());
    }

    #[test]
    fn adding_admin_never_removes_permissions(
        roles in prop::collection::btree_set(role(), 1..5),
        act in action(),
        f in facts(),
    ) {
        if cross_check(&roles, act, &f).is_permit() {
            let mut elevated = roles.clone();
            elevated.insert(Role::Admin);
            prop_assert!(cross_check(&elevated, act, &f).is_permit());
        }
    }

    #[test]
    fn permit_requires_a_role_and_a_matrix_entry(
        roles in prop::collection::btree_set(role(), 0..5),
        act in action(),
        f in facts(),
    ) {
        let d = cross_check(&roles, act, &f);
        if d.is_permit() {
            prop_assert!(!roles.is_empty());
            let p = effective_priority(&roles).unwrap();
            if p != Priority::HIGHEST {
                prop_assert!(!matches!(
                    act,
                    Action::AssignRole | Action::RevokeRole | Action::ResolveClaims | Action::Backup | Action::Restore
                ));
            }
        }
        prop_assert_eq!(d.is_permit(), d.reason_code() == "Ok");
    }

    #[test]
    fn winner_is_head_of_full_sort(set in claim_set()) {
        let claims = claims_of(&set);
        let prio = |u: &UserId| {
            set.iter().find(|(c, ..)| UserId::from_counter(*c) == *u).map(|(_, p, _)| level(*p))
        };
        let got = select_winner(&claims, prio).map(|c| c.user_id.clone());
        let keys = claims
            .iter()
            .map(|c| (prio(&c.user_id).unwrap(), c.login_time, c.user_id.clone()))
            .collect();
        prop_assert_eq!(got, brute_force_winner(keys));
    }

    #[test]
    fn winner_ignores_submission_order(set in claim_set(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let claims = claims_of(&set);
        let prio = |u: &UserId| {
            set.iter().find(|(c, ..)| UserId::from_counter(*c) == *u).map(|(_, p, _)| level(*p))
        };
        let mut shuffled = claims.clone();
        shuffled.shuffle(&mut StdRng::seed_from_u64(seed));
        prop_assert_eq!(
            select_winner(&claims, prio).map(|c| &c.user_id),
            select_winner(&shuffled, prio).map(|c| &c.user_id)
        );
    }

    #[test]
    fn board_is_totally_ordered(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut jobs: Vec<_> = random_state(&mut rng).jobs.into_values().collect();
        sort_board(&mut jobs);
        for pair in jobs.windows(2) {
            prop_assert!(pair[0].board_key() < pair[1].board_key());
        }
    }

    #[test]
    fn backup_round_trip(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let doc = BackupDocument::new(random_state(&mut rng), at("02/02/14 09:00"));
        prop_assert_eq!(BackupDocument::from_xml(&doc.to_xml()).unwrap(), doc);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn replay_reproduces_journals_and_state_invariants_hold(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let journal = random_journal(&mut rng, 60);
        let a = replay(&journal).unwrap();
        let b = replay(&journal).unwrap();
        prop_assert_eq!(a.canonical_hash(), b.canonical_hash());

        let p = &a.persistent;
        for job in p.jobs.values() {
            prop_assert_eq!(job.state == JobState::Open, job.claimed_by.is_none());
            if job.state != JobState::Open {
                prop_assert!(job.claims.is_empty());
            }
        }
        for req in p.requests.values() {
            prop_assert_eq!(req.status == RequestStatus::Pending, req.approver.is_none());
            if req.consumed {
                prop_assert_eq!(req.status, RequestStatus::Approved);
            }
        }
        let mut last = 0;
        for r in &journal {
            prop_assert_eq!(r.sequence, last + 1);
            last = r.sequence;
        }
    }
}

#[test]
fn exhaustive_matrix_for_every_role_and_action() {
    // expected outcome with favourable facts
    let ok = Facts {
        target_level: None,
        window_open: true,
        under_limit: true,
        post_grant: GrantState::None,
        requester: Some(Priority::LOWEST),
        is_assignee: false,
    };
    for r in Role::ALL {
        let roles = [r].into();
        let admin = r == Role::Admin;
        for a in Action::ALL {
            let facts = Facts {
                target_level: Some(r.priority()),
                ..ok
            };
            let d = cross_check(&roles, a, &facts);
            let expected = match a {
                Action::Login | Action::CreateAccount | Action::ListJobs | Action::RequestPermission => true,
                Action::ClaimJob => true,
                Action::ApprovePermission => r != Role::Executive,
                Action::PostJob | Action::CompleteJob => admin,
                Action::AssignRole | Action::RevokeRole | Action::ResolveClaims | Action::Backup | Action::Restore => admin,
            };
            assert_eq!(d.is_permit(), expected, "{r} {a}: {d:?}");
        }
    }
}

#[test]
fn approvals_recorded_in_random_journals_were_strictly_superior() {
    use jobgate_core::Event;
    let (mut approvals, mut claims) = (0, 0);
    for seed in 0..60 {
        let mut rng = StdRng::seed_from_u64(seed);
        let journal = random_journal(&mut rng, 120);
        let mut state = jobgate_core::State::default();
        for rec in &journal {
            if let Event::PermissionApproved { request_id, approver } = &rec.event {
                let p = &state.persistent;
                let req = &p.requests[request_id];
                let a = p.priority_of(approver).unwrap();
                let q = p.priority_of(&req.requester).unwrap();
                assert!(a.outranks(q), "seed {seed}: {a} approved {q}");
                approvals += 1;
            }
            if let Event::ClaimSubmitted { claim } = &rec.event {
                let job = &state.persistent.jobs[&claim.job_id];
                assert!(job.is_available(rec.occurred_at), "claim admitted outside window");
                claims += 1;
                // the claim's login time is the login time of a session of that user
                assert!(state
                    .sessions
                    .values()
                    .any(|s| s.user_id == claim.user_id && s.login_time == claim.login_time));
            }
            state.apply(rec).unwrap();
        }
    }
    assert!(approvals >= 10 && claims >= 30, "{approvals} approvals, {claims} claims");
}

#[test]
fn claim_admission_respects_windows() {
    let t = at("02/02/14 09:00");
    let mut w = World::new(t);
    w.user("tom", Role::Executive, t);
    let mut nj = new_job(5, "x", "");
    let (opens, closes) = (at("02/02/14 10:00"), at("02/02/14 12:00"));
    nj.window = AvailabilityWindow::new(opens, closes);
    let job = w.engine.post_job(&w.admin, nj, t).unwrap();
    let tom = w.login("tom", t);
    for minutes in (0..=240).step_by(7) {
        let now = at("02/02/14 09:00") + Duration::minutes(minutes);
        let r = w.engine.submit_claim(&tom, &job.job_id, now);
        let inside = opens <= now && now <= closes;
        if inside {
            assert!(r.is_ok(), "{now}");
            break;
        }
        assert_eq!(r.unwrap_err().code(), "WindowClosed");
    }
}
