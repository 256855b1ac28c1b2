//! The two ways a command reaches the engine: in-process against a data
//! directory, or over HTTP against a running service. Both return the wire
//! types and error codes of the HTTP API, so output doesn't depend on mode.

use std::path::PathBuf;
use std::sync::Arc;

use jobgate_core::{Action, Clock, Engine, JobId, Role, SessionToken};
use jobgate_server::app::backup_path;
use jobgate_server::error::ErrorBody;
use jobgate_server::wire::*;
use jobgate_server::ApiError;
use reqwest::blocking::{Client, RequestBuilder};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

pub trait Backend {
    fn create_account(&mut self, username: &str, password: &str) -> Result<AccountView, CliError>;
    fn set_role(&mut self, username: &str, role: Role, revoke: bool) -> Result<AccountView, CliError>;
    fn post_job(&mut self, job: NewJobBody) -> Result<JobView, CliError>;
    fn list_jobs(&mut self) -> Result<Vec<JobView>, CliError>;
    fn claim(&mut self, job: &str) -> Result<ClaimView, CliError>;
    fn resolve(&mut self, job: &str) -> Result<ResolutionView, CliError>;
    fn resolve_all(&mut self) -> Result<Vec<ResolutionView>, CliError>;
    fn backup(&mut self, name: &str) -> Result<BackupView, CliError>;
    fn restore(&mut self, name: &str) -> Result<BackupView, CliError>;
    /// Ends any session this backend opened itself.
    fn finish(&mut self) -> Result<(), CliError>;
}

pub struct Credentials {
    pub username: String,
    pub password: String,
}

fn need_credentials(creds: &Option<Credentials>) -> Result<&Credentials, CliError> {
    creds.as_ref().ok_or_else(|| {
        CliError::Usage("this command needs --token or --username and --password".into())
    })
}

/// Runs commands directly against a data directory.
pub struct Local {
    engine: Engine,
    clock: Arc<dyn Clock>,
    backups_dir: PathBuf,
    credentials: Option<Credentials>,
    token: Option<SessionToken>,
    /// True when `token` came from our own login and should be closed.
    owns_session: bool,
}

impl Local {
    pub fn new(engine: Engine, clock: Arc<dyn Clock>, backups_dir: PathBuf, credentials: Option<Credentials>, token: Option<String>) -> Self {
        Local {
            engine,
            clock,
            backups_dir,
            credentials,
            owns_session: false,
            token: token.map(SessionToken::from),
        }
    }

    fn token(&mut self) -> Result<SessionToken, CliError> {
        if let Some(t) = &self.token {
            return Ok(t.clone());
        }
        let c = need_credentials(&self.credentials)?;
        let login = self
            .engine
            .login(&c.username, &c.password, self.clock.now())
            .map_err(ApiError::from)?;
        self.token = Some(login.token.clone());
        self.owns_session = true;
        Ok(login.token)
    }

    fn with_token<T>(
        &mut self,
        f: impl FnOnce(&mut Engine, &SessionToken, jobgate_core::Timestamp) -> Result<T, jobgate_core::EngineError>,
    ) -> Result<T, CliError> {
        let token = self.token()?;
        let now = self.clock.now();
        f(&mut self.engine, &token, now).map_err(|e| ApiError::from(e).into())
    }
}

impl Backend for Local {
    fn create_account(&mut self, username: &str, password: &str) -> Result<AccountView, CliError> {
        let account = self
            .engine
            .create_account(username, password, self.clock.now())
            .map_err(ApiError::from)?;
        Ok(AccountView::from(&account))
    }

    fn set_role(&mut self, username: &str, role: Role, revoke: bool) -> Result<AccountView, CliError> {
        let account = self.with_token(|e, t, now| {
            if revoke {
                e.revoke_role(t, username, role, now)
            } else {
                e.assign_role(t, username, role, now)
            }
        })?;
        Ok(AccountView::from(&account))
    }

    fn post_job(&mut self, job: NewJobBody) -> Result<JobView, CliError> {
        let new = jobgate_server::app::new_job(job)?;
        self.with_token(|e, t, now| {
            let job = e.post_job(t, new, now)?;
            Ok(JobView::new(&job, &e.state().persistent))
        })
    }

    fn list_jobs(&mut self) -> Result<Vec<JobView>, CliError> {
        self.with_token(|e, t, now| {
            let jobs = e.list_jobs(t, now)?;
            let p = &e.state().persistent;
            Ok(jobs.iter().map(|j| JobView::new(j, p)).collect())
        })
    }

    fn claim(&mut self, job: &str) -> Result<ClaimView, CliError> {
        self.with_token(|e, t, now| {
            let c = e.submit_claim(t, &JobId::from(job), now)?;
            Ok(ClaimView::new(&c, &e.state().persistent))
        })
    }

    fn resolve(&mut self, job: &str) -> Result<ResolutionView, CliError> {
        self.with_token(|e, t, now| {
            let r = e.resolve_claims(t, &JobId::from(job), now)?;
            Ok(ResolutionView::new(&r, &e.state().persistent))
        })
    }

    fn resolve_all(&mut self) -> Result<Vec<ResolutionView>, CliError> {
        self.with_token(|e, t, now| {
            let rs = e.resolve_all(t, now)?;
            let p = &e.state().persistent;
            Ok(rs.iter().map(|r| ResolutionView::new(r, p)).collect())
        })
    }

    fn backup(&mut self, name: &str) -> Result<BackupView, CliError> {
        let path = backup_path(&self.backups_dir, name)?;
        let token = self.token()?;
        let now = self.clock.now();
        jobgate_server::app::require(&self.engine, &token, Action::Backup, now)?;
        std::fs::create_dir_all(&self.backups_dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.backups_dir.display())))?;
        let doc = self.engine.backup(&token, &path, now).map_err(ApiError::from)?;
        Ok(BackupView::new(name.to_owned(), &doc))
    }

    fn restore(&mut self, name: &str) -> Result<BackupView, CliError> {
        let path = backup_path(&self.backups_dir, name)?;
        let token = self.token()?;
        let now = self.clock.now();
        jobgate_server::app::require(&self.engine, &token, Action::Restore, now)?;
        if !path.is_file() {
            return Err(jobgate_server::app::unknown_backup(name).into());
        }
        let doc = self.engine.restore(&token, &path, now).map_err(ApiError::from)?;
        // restore ended every session, ours included
        self.owns_session = false;
        Ok(BackupView::new(name.to_owned(), &doc))
    }

    fn finish(&mut self) -> Result<(), CliError> {
        if let (true, Some(token)) = (self.owns_session, self.token.take()) {
            self.engine
                .logout(&token, self.clock.now())
                .map_err(ApiError::from)?;
        }
        Ok(())
    }
}

/// Runs commands against a service over HTTP.
pub struct Remote {
    client: Client,
    base: String,
    credentials: Option<Credentials>,
    token: Option<String>,
    owns_session: bool,
}

impl Remote {
    pub fn new(base: &str, credentials: Option<Credentials>, token: Option<String>) -> Result<Self, CliError> {
        let client = Client::builder()
            .build()
            .map_err(|e| CliError::Transport(e.to_string()))?;
        Ok(Remote {
            client,
            base: base.trim_end_matches('/').to_owned(),
            credentials,
            token,
            owns_session: false,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send<T: DeserializeOwned>(req: RequestBuilder) -> Result<T, CliError> {
        let resp = req.send().map_err(|e| CliError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.is_success() {
            return resp.json().map_err(|e| CliError::Transport(format!("bad response: {e}")));
        }
        let body: ErrorBody = resp.json().unwrap_or_else(|_| ErrorBody {
            code: "HttpError".into(),
            message: status.to_string(),
        });
        Err(ApiError {
            status,
            code: body.code,
            message: body.message,
        }
        .into())
    }

    fn token(&mut self) -> Result<String, CliError> {
        if let Some(t) = &self.token {
            return Ok(t.clone());
        }
        let c = need_credentials(&self.credentials)?;
        let body = jobgate_server::wire::Credentials {
            username: c.username.clone(),
            password: c.password.clone(),
        };
        let login: LoginResponse = Self::send(self.client.post(self.url("/login")).json(&body))?;
        self.token = Some(login.token.clone());
        self.owns_session = true;
        Ok(login.token)
    }

    fn post<T: DeserializeOwned>(&mut self, path: &str, body: &impl Serialize) -> Result<T, CliError> {
        let token = self.token()?;
        Self::send(self.client.post(self.url(path)).bearer_auth(token).json(body))
    }
}

impl Backend for Remote {
    fn create_account(&mut self, username: &str, password: &str) -> Result<AccountView, CliError> {
        let body = jobgate_server::wire::Credentials {
            username: username.to_owned(),
            password: password.to_owned(),
        };
        Self::send(self.client.post(self.url("/accounts")).json(&body))
    }

    fn set_role(&mut self, username: &str, role: Role, revoke: bool) -> Result<AccountView, CliError> {
        let path = if revoke { "/roles/revoke" } else { "/roles/assign" };
        let body = RoleBody {
            username: username.to_owned(),
            role: role.as_str().to_owned(),
        };
        self.post(path, &body)
    }

    fn post_job(&mut self, job: NewJobBody) -> Result<JobView, CliError> {
        self.post("/jobs", &job)
    }

    fn list_jobs(&mut self) -> Result<Vec<JobView>, CliError> {
        let token = self.token()?;
        Self::send(self.client.get(self.url("/jobs")).bearer_auth(token))
    }

    fn claim(&mut self, job: &str) -> Result<ClaimView, CliError> {
        self.post(&format!("/jobs/{job}/claim"), &serde_json::json!({}))
    }

    fn resolve(&mut self, job: &str) -> Result<ResolutionView, CliError> {
        self.post(&format!("/jobs/{job}/resolve"), &serde_json::json!({}))
    }

    fn resolve_all(&mut self) -> Result<Vec<ResolutionView>, CliError> {
        self.post("/jobs/resolve", &serde_json::json!({}))
    }

    fn backup(&mut self, name: &str) -> Result<BackupView, CliError> {
        self.post("/admin/backup", &BackupBody { name: name.to_owned() })
    }

    fn restore(&mut self, name: &str) -> Result<BackupView, CliError> {
        let view = self.post("/admin/restore", &BackupBody { name: name.to_owned() })?;
        self.owns_session = false;
        Ok(view)
    }

    fn finish(&mut self) -> Result<(), CliError> {
        if let (true, Some(token)) = (self.owns_session, self.token.take()) {
            let _: serde_json::Value = Self::send(self.client.post(self.url("/logout")).bearer_auth(token))?;
        }
        Ok(())
    }
}
