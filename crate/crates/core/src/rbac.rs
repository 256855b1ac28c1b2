//! Role hierarchy and the two-phase access decision.
//!
//! Roles are handed out by an administrator (assignment phase) and every
//! request is then cross-checked against the authorization matrix
//! (decision phase). Both phases are pure functions of the facts passed in;
//! the engine is responsible for gathering those facts from its state.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numeric priority level, 1 (highest) through 5 (lowest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Priority(u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("priority level {0} is outside 1..=5")]
pub struct InvalidLevel(pub i64);

impl Priority {
    pub const HIGHEST: Priority = Priority(1);
    pub const LOWEST: Priority = Priority(5);

    pub fn new(level: u8) -> Result<Self, InvalidLevel> {
        if (1..=5).contains(&level) {
            Ok(Priority(level))
        } else {
            Err(InvalidLevel(level.into()))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// The role that sits at this level of the hierarchy.
    pub fn role(self) -> Role {
        Role::ALL[usize::from(self.0) - 1]
    }

    /// True when `self` strictly outranks `other`.
    pub fn outranks(self, other: Priority) -> bool {
        self.0 < other.0
    }
}

impl TryFrom<u8> for Priority {
    type Error = InvalidLevel;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Priority::new(value)
    }
}

impl From<Priority> for u8 {
    fn from(p: Priority) -> u8 {
        p.0
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The five organisational roles, declared highest priority first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Admin,
    President,
    /// General Manager.
    GM,
    Manager,
    Executive,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Admin,
        Role::President,
        Role::GM,
        Role::Manager,
        Role::Executive,
    ];

    pub fn priority(self) -> Priority {
        role_priority(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Admin => "Admin",
            Role::President => "President",
            Role::GM => "GM",
            Role::Manager => "Manager",
            Role::Executive => "Executive",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown role `{0}`")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownRole(s.to_owned()))
    }
}

/// Fixed priority of a role: Admin=1, President=2, GM=3, Manager=4, Executive=5.
pub fn role_priority(role: Role) -> Priority {
    let level = match role {
        Role::Admin => 1,
        Role::President => 2,
        Role::GM => 3,
        Role::Manager => 4,
        Role::Executive => 5,
    };
    Priority(level)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("account holds no roles")]
pub struct EmptyRoleSet;

/// The strongest (numerically smallest) priority among the held roles.
pub fn effective_priority<'a, I>(roles: I) -> Result<Priority, EmptyRoleSet>
where
    I: IntoIterator<Item = &'a Role>,
{
    roles
        .into_iter()
        .map(|r| r.priority())
        .min()
        .ok_or(EmptyRoleSet)
}

pub type RoleSet = BTreeSet<Role>;

/// Every operation a caller can ask the engine to perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    CreateAccount,
    Login,
    PostJob,
    ListJobs,
    ClaimJob,
    ResolveClaims,
    CompleteJob,
    AssignRole,
    RevokeRole,
    RequestPermission,
    ApprovePermission,
    Backup,
    Restore,
}

impl Action {
    pub const ALL: [Action; 13] = [
        Action::CreateAccount,
        Action::Login,
        Action::PostJob,
        Action::ListJobs,
        Action::ClaimJob,
        Action::ResolveClaims,
        Action::CompleteJob,
        Action::AssignRole,
        Action::RevokeRole,
        Action::RequestPermission,
        Action::ApprovePermission,
        Action::Backup,
        Action::Restore,
    ];

    /// Actions charged against the daily transaction allowance.
    pub fn is_counted(self) -> bool {
        matches!(self, Action::ClaimJob | Action::PostJob)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown action `{0}`")]
pub struct UnknownAction(pub String);

impl FromStr for Action {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownAction(s.to_owned()))
    }
}

/// Why a request was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DenyReason {
    NotAdmin,
    WrongLevel,
    WindowClosed,
    TransactionLimit,
    NoApproval,
    SessionExpired,
    NotSuperior,
    NotAssignee,
}

impl DenyReason {
    pub fn code(self) -> &'static str {
        match self {
            DenyReason::NotAdmin => "NotAdmin",
            DenyReason::WrongLevel => "WrongLevel",
            DenyReason::WindowClosed => "WindowClosed",
            DenyReason::TransactionLimit => "TransactionLimit",
            DenyReason::NoApproval => "NoApproval",
            DenyReason::SessionExpired => "SessionExpired",
            DenyReason::NotSuperior => "NotSuperior",
            DenyReason::NotAssignee => "NotAssignee",
        }
    }
}

impl fmt::Display for DenyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Outcome of the cross-check. A permit always carries reason `Ok`,
/// which the type encodes by having no reason at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "reason")]
pub enum Decision {
    Permit,
    Deny(DenyReason),
}

impl Decision {
    pub fn is_permit(self) -> bool {
        matches!(self, Decision::Permit)
    }

    pub fn reason_code(self) -> &'static str {
        match self {
            Decision::Permit => "Ok",
            Decision::Deny(r) => r.code(),
        }
    }

    pub fn into_result(self) -> Result<(), DenyReason> {
        match self {
            Decision::Permit => Ok(()),
            Decision::Deny(r) => Err(r),
        }
    }
}

/// State of the caller's approval grant for posting a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrantState {
    #[default]
    None,
    Pending,
    Approved,
}

/// Request attributes the matrix consults beyond the caller's role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Facts {
    /// Level of the job being acted on, if any.
    pub target_level: Option<Priority>,
    pub window_open: bool,
    pub under_limit: bool,
    pub post_grant: GrantState,
    /// Effective priority of the requester whose permission is being approved.
    pub requester: Option<Priority>,
    pub is_assignee: bool,
}

impl Default for Facts {
    fn default() -> Self {
        Facts {
            target_level: None,
            window_open: true,
            under_limit: true,
            post_grant: GrantState::None,
            requester: None,
            is_assignee: false,
        }
    }
}

/// Cross-check phase: evaluates the authorization matrix for a caller
/// holding `roles`. Session liveness is checked by the caller.
pub fn cross_check(roles: &RoleSet, action: Action, facts: &Facts) -> Decision {
    let Ok(priority) = effective_priority(roles) else {
        return Decision::Deny(DenyReason::NotAdmin);
    };
    let admin = priority == Priority::HIGHEST;
    let limit = || {
        if facts.under_limit {
            Decision::Permit
        } else {
            Decision::Deny(DenyReason::TransactionLimit)
        }
    };

    match action {
        Action::Login | Action::CreateAccount | Action::ListJobs | Action::RequestPermission => {
            Decision::Permit
        }
        Action::ClaimJob => {
            if !admin && facts.target_level != Some(priority) {
                Decision::Deny(DenyReason::WrongLevel)
            } else if !facts.window_open {
                Decision::Deny(DenyReason::WindowClosed)
            } else {
                limit()
            }
        }
        Action::ApprovePermission => match facts.requester {
            Some(requester) if priority.outranks(requester) => Decision::Permit,
            _ => Decision::Deny(DenyReason::NotSuperior),
        },
        Action::PostJob => {
            if admin {
                return limit();
            }
            match facts.post_grant {
                GrantState::Approved => limit(),
                GrantState::Pending => Decision::Deny(DenyReason::NoApproval),
                GrantState::None => Decision::Deny(DenyReason::NotAdmin),
            }
        }
        Action::CompleteJob => {
            if admin || facts.is_assignee {
                Decision::Permit
            } else {
                Decision::Deny(DenyReason::NotAssignee)
            }
        }
        Action::AssignRole
        | Action::RevokeRole
        | Action::ResolveClaims
        | Action::Backup
        | Action::Restore => {
            if admin {
                Decision::Permit
            } else {
                Decision::Deny(DenyReason::NotAdmin)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(roles: &[Role]) -> RoleSet {
        roles.iter().copied().collect()
    }

    #[test]
    fn priorities_follow_the_fixed_order() {
        assert_eq!(role_priority(Role::Admin).get(), 1);
        assert_eq!(role_priority(Role::President).get(), 2);
        assert_eq!(role_priority(Role::GM).get(), 3);
        assert_eq!(role_priority(Role::Manager).get(), 4);
        assert_eq!(role_priority(Role::Executive).get(), 5);
        for r in Role::ALL {
            assert_eq!(r.priority().role(), r);
        }
    }

    #[test]
    fn priority_is_total_and_distinct() {
        for a in Role::ALL {
            for b in Role::ALL {
                if a != b {
                    let (pa, pb) = (a.priority(), b.priority());
                    assert!(pa.outranks(pb) ^ pb.outranks(pa), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn effective_priority_takes_strongest_role() {
        assert_eq!(effective_priority(&set(&[Role::Admin])).unwrap().get(), 1);
        assert_eq!(
            effective_priority(&[Role::Manager, Role::Executive]).unwrap().get(),
            4
        );
        assert_eq!(effective_priority(&set(&[])), Err(EmptyRoleSet));
        // duplicates and order do not matter
        assert_eq!(
            effective_priority(&[Role::Executive, Role::GM, Role::Executive, Role::GM]).unwrap(),
            Priority::new(3).unwrap()
        );
    }

    #[test]
    fn level_bounds() {
        assert!(Priority::new(0).is_err());
        assert!(Priority::new(6).is_err());
        assert_eq!(Priority::new(5).unwrap(), Priority::LOWEST);
        assert!(serde_json::from_str::<Priority>("9").is_err());
    }

    #[test]
    fn role_and_action_parse() {
        assert_eq!("gm".parse::<Role>().unwrap(), Role::GM);
        assert_eq!("Executive".parse::<Role>().unwrap(), Role::Executive);
        assert!("Intern".parse::<Role>().is_err());
        assert_eq!("postjob".parse::<Action>().unwrap(), Action::PostJob);
        for a in Action::ALL {
            assert_eq!(a.to_string().parse::<Action>().unwrap(), a);
        }
    }

    #[test]
    fn executive_cannot_post_but_admin_can() {
        let facts = Facts::default();
        assert_eq!(
            cross_check(&set(&[Role::Executive]), Action::PostJob, &facts),
            Decision::Deny(DenyReason::NotAdmin)
        );
        assert_eq!(
            cross_check(&set(&[Role::Admin]), Action::PostJob, &facts),
            Decision::Permit
        );
    }

    #[test]
    fn pending_grant_reports_no_approval() {
        let facts = Facts {
            post_grant: GrantState::Pending,
            ..Facts::default()
        };
        assert_eq!(
            cross_check(&set(&[Role::Manager]), Action::PostJob, &facts),
            Decision::Deny(DenyReason::NoApproval)
        );
    }

    #[test]
    fn claim_checks_level_then_window_then_limit() {
        let exec = set(&[Role::Executive]);
        let five = Priority::new(5).ok();
        let mut facts = Facts {
            target_level: Priority::new(4).ok(),
            window_open: false,
            under_limit: false,
            ..Facts::default()
        };
        assert_eq!(
            cross_check(&exec, Action::ClaimJob, &facts),
            Decision::Deny(DenyReason::WrongLevel)
        );
        facts.target_level = five;
        assert_eq!(
            cross_check(&exec, Action::ClaimJob, &facts),
            Decision::Deny(DenyReason::WindowClosed)
        );
        facts.window_open = true;
        assert_eq!(
            cross_check(&exec, Action::ClaimJob, &facts),
            Decision::Deny(DenyReason::TransactionLimit)
        );
        facts.under_limit = true;
        assert!(cross_check(&exec, Action::ClaimJob, &facts).is_permit());
    }

    #[test]
    fn approval_requires_strictly_higher_rank() {
        let facts = Facts {
            requester: Some(Role::Executive.priority()),
            ..Facts::default()
        };
        assert!(cross_check(&set(&[Role::Manager]), Action::ApprovePermission, &facts).is_permit());
        assert_eq!(
            cross_check(&set(&[Role::Executive]), Action::ApprovePermission, &facts),
            Decision::Deny(DenyReason::NotSuperior)
        );
    }

    #[test]
    fn empty_role_set_is_never_permitted() {
        for a in Action::ALL {
            assert!(!cross_check(&RoleSet::new(), a, &Facts::default()).is_permit());
        }
    }

    #[test]
    fn decision_serializes_with_reason() {
        let d = Decision::Deny(DenyReason::WrongLevel);
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"outcome":"Deny","reason":"WrongLevel"}"#
        );
        assert_eq!(Decision::Permit.reason_code(), "Ok");
    }
}
