//! Role-gated job board with first-come-first-served claim resolution.
//!
//! Five roles form a strict hierarchy (Admin outranks President, GM,
//! Manager and Executive in that order). Admins post jobs and resolve the
//! claim queue of each job; other users see and claim only jobs posted for
//! their own level. When several users contend for one job the winner is
//! the claimant with the highest priority, then the earliest login, then
//! the smallest user id.
//!
//! All mutations go through [`Engine`], which journals an [`Event`] before
//! applying it, so the state can be rebuilt from the journal at any time.

pub mod account;
pub mod approval;
pub mod engine;
pub mod error;
pub mod event;
pub mod ids;
pub mod jobs;
pub mod rbac;
pub mod state;
pub mod store;
pub mod time;

pub use account::{HashCost, Session, SessionToken, UserAccount};
pub use approval::{PermissionRequest, RequestStatus};
pub use engine::{AccessRequest, Engine, EngineConfig, Login, Resolution};
pub use error::EngineError;
pub use event::{Event, JournalRecord};
pub use ids::{JobId, RequestId, UserId};
pub use jobs::{AvailabilityWindow, ClaimRequest, Job, JobState, NewJob, TransactionPolicy};
pub use rbac::{Action, Decision, DenyReason, Priority, Role};
pub use state::{PersistentState, State};
pub use time::{Clock, ManualClock, SystemClock, Timestamp};
