//! XML backup documents.
//!
//! Layout (format version 1):
//!
//! ```xml
//! <backup version="1" taken_at="2014-02-03T12:00:00.000Z">
//!   <counters next_user=".." next_job=".." next_request=".." next_claim_sequence=".."/>
//!   <accounts>
//!     <account id=".." username=".." credential_hash=".." tx_count="0" tx_day=".." created_at="..">
//!       <role>Admin</role>
//!     </account>
//!   </accounts>
//!   <jobs>
//!     <job id=".." assigned_by=".." assigned_on=".." level="5" type=".." description=".." state="Open" claimed_by="..">
//!       <window opens=".." closes=".."/>
//!       <claim user_id=".." login_time=".." submitted_at=".." sequence=".."/>
//!     </job>
//!   </jobs>
//!   <permission_requests>
//!     <request id=".." requester=".." action="PostJob" status="Approved" approver=".." requested_at=".." consumed="false"/>
//!   </permission_requests>
//! </backup>
//! ```
//!
//! All free text lives in attributes, with tab, CR and LF written as
//! character references so that attribute-value normalization in other
//! XML readers does not alter them. Sessions are never written.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::UserAccount;
use crate::approval::{PermissionRequest, RequestStatus};
use crate::ids::{JobId, RequestId, UserId};
use crate::jobs::{AvailabilityWindow, ClaimRequest, Job, JobState};
use crate::rbac::{Action, Priority, Role};
use crate::state::{Counters, PersistentState};
use crate::time::{iso, parse_iso, Timestamp};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BackupError {
    #[error("backup document does not parse: {0}")]
    Parse(String),
    #[error("unsupported backup format version {0}")]
    UnsupportedVersion(u32),
    #[error("storage failure: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl BackupError {
    pub fn code(&self) -> &'static str {
        match self {
            BackupError::Parse(_) => "ParseError",
            BackupError::UnsupportedVersion(_) => "UnsupportedVersion",
            BackupError::Io { .. } => "StorageFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackupDocument {
    pub format_version: u32,
    pub taken_at: Timestamp,
    pub state: PersistentState,
}

impl BackupDocument {
    pub fn new(state: PersistentState, taken_at: Timestamp) -> Self {
        BackupDocument {
            format_version: FORMAT_VERSION,
            taken_at,
            state,
        }
    }

    pub fn to_xml(&self) -> String {
        let doc = Xml::from(self);
        let body = quick_xml::se::to_string(&doc).expect("backup document serializes");
        // the serializer emits no whitespace of its own, so any of these
        // characters sit inside an attribute value
        let body = body
            .replace('\t', "&#9;")
            .replace('\n', "&#10;")
            .replace('\r', "&#13;");
        format!("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n{body}\n")
    }

    pub fn from_xml(text: &str) -> Result<Self, BackupError> {
        // check the version before the full schema so newer documents are
        // reported as such rather than as parse errors
        let header: Header =
            quick_xml::de::from_str(text).map_err(|e| BackupError::Parse(e.to_string()))?;
        if header.version != FORMAT_VERSION {
            return Err(BackupError::UnsupportedVersion(header.version));
        }
        let doc: Xml = quick_xml::de::from_str(text).map_err(|e| BackupError::Parse(e.to_string()))?;
        doc.try_into()
    }

    pub fn write_to(&self, path: &Path) -> Result<(), BackupError> {
        let io = |source| BackupError::Io {
            context: format!("write {}", path.display()),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io)?;
        }
        let tmp = path.with_extension("xml.tmp");
        fs::write(&tmp, self.to_xml()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn read_from(path: &Path) -> Result<Self, BackupError> {
        let text = fs::read_to_string(path).map_err(|source| BackupError::Io {
            context: format!("read {}", path.display()),
            source,
        })?;
        Self::from_xml(&text)
    }
}

#[derive(Deserialize)]
#[serde(rename = "backup")]
struct Header {
    #[serde(rename = "@version")]
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(rename = "backup")]
struct Xml {
    #[serde(rename = "@version")]
    version: u32,
    #[serde(rename = "@taken_at")]
    taken_at: String,
    counters: CountersXml,
    accounts: AccountsXml,
    jobs: JobsXml,
    permission_requests: RequestsXml,
}

#[derive(Serialize, Deserialize)]
struct CountersXml {
    #[serde(rename = "@next_user")]
    next_user: u64,
    #[serde(rename = "@next_job")]
    next_job: u64,
    #[serde(rename = "@next_request")]
    next_request: u64,
    #[serde(rename = "@next_claim_sequence")]
    next_claim_sequence: u64,
}

#[derive(Serialize, Deserialize, Default)]
struct AccountsXml {
    #[serde(rename = "account", default)]
    items: Vec<AccountXml>,
}

#[derive(Serialize, Deserialize)]
struct AccountXml {
    #[serde(rename = "@id")]
    id: String,
    #[serde(rename = "@username")]
    username: String,
    #[serde(rename = "@credential_hash")]
    credential_hash: String,
    #[serde(rename = "@tx_count")]
    tx_count: u32,
    #[serde(rename = "@tx_day", default, skip_serializing_if = "Option::is_none")]
    tx_day: Option<String>,
    #[serde(rename = "@created_at")]
    created_at: String,
    #[serde(rename = "role", default)]
    roles: Vec<String>,
}

#[derive(Serialize, Deserialize, Default)]
struct JobsXml {
    #[serde(rename = "job", default)]
    items: Vec<JobXml>,
}

#[derive(Serialize, Deserialize)]
struct JobXml {
    #[serde(rename = "@id")]
    id: String,
    #[serde(rename = "@assigned_by")]
    assigned_by: String,
    #[serde(rename = "@assigned_on")]
    assigned_on: String,
    #[serde(rename = "@level")]
    level: u8,
    #[serde(rename = "@state")]
    state: String,
    #[serde(rename = "@claimed_by", default, skip_serializing_if = "Option::is_none")]
    claimed_by: Option<String>,
    #[serde(rename = "@type")]
    job_type: String,
    #[serde(rename = "@description", default)]
    description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<WindowXml>,
    #[serde(rename = "claim", default)]
    claims: Vec<ClaimXml>,
}

#[derive(Serialize, Deserialize)]
struct WindowXml {
    #[serde(rename = "@opens")]
    opens: String,
    #[serde(rename = "@closes")]
    closes: String,
}

#[derive(Serialize, Deserialize)]
struct ClaimXml {
    #[serde(rename = "@user_id")]
    user_id: String,
    #[serde(rename = "@login_time")]
    login_time: String,
    #[serde(rename = "@submitted_at")]
    submitted_at: String,
    #[serde(rename = "@sequence")]
    sequence: u64,
}

#[derive(Serialize, Deserialize, Default)]
struct RequestsXml {
    #[serde(rename = "request", default)]
    items: Vec<RequestXml>,
}

#[derive(Serialize, Deserialize)]
struct RequestXml {
    #[serde(rename = "@id")]
    id: String,
    #[serde(rename = "@requester")]
    requester: String,
    #[serde(rename = "@action")]
    action: String,
    #[serde(rename = "@status")]
    status: String,
    #[serde(rename = "@approver", default, skip_serializing_if = "Option::is_none")]
    approver: Option<String>,
    #[serde(rename = "@requested_at")]
    requested_at: String,
    #[serde(rename = "@consumed")]
    consumed: bool,
}

impl From<&BackupDocument> for Xml {
    fn from(doc: &BackupDocument) -> Self {
        let s = &doc.state;
        Xml {
            version: doc.format_version,
            taken_at: iso(doc.taken_at),
            counters: CountersXml {
                next_user: s.counters.next_user,
                next_job: s.counters.next_job,
                next_request: s.counters.next_request,
                next_claim_sequence: s.counters.next_claim_sequence,
            },
            accounts: AccountsXml {
                items: s
                    .accounts
                    .values()
                    .map(|a| AccountXml {
                        id: a.user_id.to_string(),
                        username: a.username.clone(),
                        credential_hash: a.credential.clone(),
                        tx_count: a.tx_count,
                        tx_day: a.tx_day.map(|d| d.to_string()),
                        created_at: iso(a.created_at),
                        roles: a.roles.iter().map(|r| r.to_string()).collect(),
                    })
                    .collect(),
            },
            jobs: JobsXml {
                items: s
                    .jobs
                    .values()
                    .map(|j| JobXml {
                        id: j.job_id.to_string(),
                        assigned_by: j.assigned_by.clone(),
                        assigned_on: iso(j.assigned_on),
                        level: j.target_level.get(),
                        state: j.state.as_str().to_owned(),
                        claimed_by: j.claimed_by.as_ref().map(ToString::to_string),
                        job_type: j.job_type.clone(),
                        description: j.description.clone(),
                        window: j.window.map(|w| WindowXml {
                            opens: iso(w.opens_at),
                            closes: iso(w.closes_at),
                        }),
                        claims: j
                            .claims
                            .iter()
                            .map(|c| ClaimXml {
                                user_id: c.user_id.to_string(),
                                login_time: iso(c.login_time),
                                submitted_at: iso(c.submitted_at),
                                sequence: c.sequence,
                            })
                            .collect(),
                    })
                    .collect(),
            },
            permission_requests: RequestsXml {
                items: s
                    .requests
                    .values()
                    .map(|r| RequestXml {
                        id: r.request_id.to_string(),
                        requester: r.requester.to_string(),
                        action: r.action.to_string(),
                        status: r.status.as_str().to_owned(),
                        approver: r.approver.as_ref().map(ToString::to_string),
                        requested_at: iso(r.requested_at),
                        consumed: r.consumed,
                    })
                    .collect(),
            },
        }
    }
}

fn ts(s: &str) -> Result<Timestamp, BackupError> {
    parse_iso(s).ok_or_else(|| BackupError::Parse(format!("bad timestamp `{s}`")))
}

fn bad(what: impl std::fmt::Display) -> BackupError {
    BackupError::Parse(what.to_string())
}

impl TryFrom<Xml> for BackupDocument {
    type Error = BackupError;

    fn try_from(x: Xml) -> Result<Self, Self::Error> {
        let mut state = PersistentState {
            counters: Counters {
                next_user: x.counters.next_user,
                next_job: x.counters.next_job,
                next_request: x.counters.next_request,
                next_claim_sequence: x.counters.next_claim_sequence,
            },
            ..PersistentState::default()
        };

        for a in x.accounts.items {
            let roles = a
                .roles
                .iter()
                .map(|r| r.parse::<Role>())
                .collect::<Result<_, _>>()
                .map_err(bad)?;
            let tx_day = a
                .tx_day
                .as_deref()
                .map(str::parse::<NaiveDate>)
                .transpose()
                .map_err(bad)?;
            let account = UserAccount {
                user_id: UserId::from(a.id),
                username: a.username,
                credential: a.credential_hash,
                roles,
                tx_day,
                tx_count: a.tx_count,
                created_at: ts(&a.created_at)?,
            };
            if account.roles.is_empty() {
                return Err(bad(format!("account {} has no roles", account.user_id)));
            }
            if state
                .accounts
                .insert(account.user_id.clone(), account)
                .is_some()
            {
                return Err(bad("duplicate account id"));
            }
        }

        for j in x.jobs.items {
            let job_id = JobId::from(j.id);
            let state_ = match j.state.as_str() {
                "Open" => JobState::Open,
                "Assigned" => JobState::Assigned,
                "Completed" => JobState::Completed,
                other => return Err(bad(format!("unknown job state `{other}`"))),
            };
            let window = j
                .window
                .map(|w| {
                    AvailabilityWindow::new(ts(&w.opens)?, ts(&w.closes)?)
                        .ok_or_else(|| bad("window opens after it closes"))
                })
                .transpose()?;
            let claims = j
                .claims
                .into_iter()
                .map(|c| {
                    Ok(ClaimRequest {
                        job_id: job_id.clone(),
                        user_id: UserId::from(c.user_id),
                        login_time: ts(&c.login_time)?,
                        submitted_at: ts(&c.submitted_at)?,
                        sequence: c.sequence,
                    })
                })
                .collect::<Result<Vec<_>, BackupError>>()?;
            let job = Job {
                job_id: job_id.clone(),
                assigned_by: j.assigned_by,
                assigned_on: ts(&j.assigned_on)?,
                target_level: Priority::new(j.level).map_err(bad)?,
                job_type: j.job_type,
                description: j.description,
                window,
                state: state_,
                claimed_by: j.claimed_by.map(UserId::from),
                claims,
            };
            if (job.state == JobState::Open) != job.claimed_by.is_none() {
                return Err(bad(format!("job {job_id} state disagrees with claimed_by")));
            }
            if state.jobs.insert(job_id, job).is_some() {
                return Err(bad("duplicate job id"));
            }
        }

        for r in x.permission_requests.items {
            let status = match r.status.as_str() {
                "Pending" => RequestStatus::Pending,
                "Approved" => RequestStatus::Approved,
                "Denied" => RequestStatus::Denied,
                other => return Err(bad(format!("unknown request status `{other}`"))),
            };
            let req = PermissionRequest {
                request_id: RequestId::from(r.id),
                requester: UserId::from(r.requester),
                action: r.action.parse::<Action>().map_err(bad)?,
                status,
                approver: r.approver.map(UserId::from),
                requested_at: ts(&r.requested_at)?,
                consumed: r.consumed,
            };
            if state
                .requests
                .insert(req.request_id.clone(), req)
                .is_some()
            {
                return Err(bad("duplicate request id"));
            }
        }

        Ok(BackupDocument {
            format_version: x.version,
            taken_at: ts(&x.taken_at)?,
            state,
        })
    }
}
