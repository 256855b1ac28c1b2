//! Permission requests: a lower-ranked user asks, a strictly higher-ranked
//! user grants.

use serde::{Deserialize, Serialize};

use crate::ids::{RequestId, UserId};
use crate::rbac::Action;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestStatus {
    Pending,
    Approved,
    Denied,
}

impl RequestStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestStatus::Pending => "Pending",
            RequestStatus::Approved => "Approved",
            RequestStatus::Denied => "Denied",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionRequest {
    pub request_id: RequestId,
    pub requester: UserId,
    pub action: Action,
    pub status: RequestStatus,
    pub approver: Option<UserId>,
    pub requested_at: Timestamp,
    /// Set once an approved grant has been spent.
    pub consumed: bool,
}

impl PermissionRequest {
    /// An approved grant for `action` that has not been used yet.
    pub fn is_live_grant(&self, action: Action) -> bool {
        self.action == action && self.status == RequestStatus::Approved && !self.consumed
    }
}
