use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::extract::{FromRequestParts, Path, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use jobgate_core::{
    Action, AvailabilityWindow, Clock, Engine, EngineError, JobId, NewJob, Priority, RequestId, Role,
    SessionToken, Timestamp,
};
use parking_lot::RwLock;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::wire::*;

/// Shared handler state. The engine lock is the single writer: every
/// mutation, including the clock read, happens under it, so admission
/// order equals journal order.
#[derive(Clone)]
pub struct AppState {
    engine: Arc<RwLock<Engine>>,
    clock: Arc<dyn Clock>,
    backups_dir: PathBuf,
}

impl AppState {
    pub fn new(engine: Engine, clock: Arc<dyn Clock>, backups_dir: impl Into<PathBuf>) -> Self {
        AppState {
            engine: Arc::new(RwLock::new(engine)),
            clock,
            backups_dir: backups_dir.into(),
        }
    }

    pub fn engine(&self) -> &Arc<RwLock<Engine>> {
        &self.engine
    }

    async fn write<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Engine, Timestamp) -> Result<T, ApiError> + Send + 'static,
    {
        let (engine, clock) = (self.engine.clone(), self.clock.clone());
        tokio::task::spawn_blocking(move || {
            let mut engine = engine.write();
            let now = clock.now();
            f(&mut engine, now)
        })
        .await
        .map_err(|_| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", "handler panicked"))?
    }

    async fn read<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&Engine, Timestamp) -> Result<T, ApiError> + Send + 'static,
    {
        let (engine, clock) = (self.engine.clone(), self.clock.clone());
        tokio::task::spawn_blocking(move || {
            let engine = engine.read();
            let now = clock.now();
            f(&engine, now)
        })
        .await
        .map_err(|_| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", "handler panicked"))?
    }
}

/// `Authorization: Bearer <token>`.
pub struct Bearer(pub SessionToken);

impl<S: Send + Sync> FromRequestParts<S> for Bearer {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        let value = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        match value.split_once(' ') {
            Some((scheme, token)) if scheme.eq_ignore_ascii_case("bearer") && !token.trim().is_empty() => {
                Ok(Bearer(SessionToken::from(token.trim())))
            }
            _ => Err(ApiError::unauthorized("malformed authorization header")),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Body<T> = Result<Json<T>, JsonRejection>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/accounts", post(create_account))
        .route("/login", post(login))
        .route("/logout", post(logout))
        .route("/session", get(session))
        .route("/jobs", get(list_jobs).post(post_job))
        .route("/jobs/resolve", post(resolve_all))
        .route("/jobs/{id}/claim", post(claim))
        .route("/jobs/{id}/resolve", post(resolve))
        .route("/jobs/{id}/complete", post(complete))
        .route("/roles/assign", post(assign_role))
        .route("/roles/revoke", post(revoke_role))
        .route("/permissions", get(approvable))
        .route("/permissions/request", post(request_permission))
        .route("/permissions/{id}/approve", post(approve))
        .route("/admin/backup", post(backup))
        .route("/admin/restore", post(restore))
        .with_state(state)
}

async fn create_account(State(app): State<AppState>, body: Body<Credentials>) -> ApiResult<(StatusCode, Json<AccountView>)> {
    let Json(c) = body?;
    let account = app
        .write(move |e, now| Ok(e.create_account(&c.username, &c.password, now)?))
        .await?;
    Ok((StatusCode::CREATED, Json(AccountView::from(&account))))
}

async fn login(State(app): State<AppState>, body: Body<Credentials>) -> ApiResult<Json<LoginResponse>> {
    let Json(c) = body?;
    app.write(move |e, now| {
        let login = e.login(&c.username, &c.password, now)?;
        let account = e
            .account(&login.session.user_id)
            .expect("session of an existing account");
        Ok(Json(LoginResponse::new(&login, account)))
    })
    .await
}

async fn logout(State(app): State<AppState>, Bearer(token): Bearer) -> ApiResult<Json<Value>> {
    app.write(move |e, now| Ok(e.logout(&token, now)?)).await?;
    Ok(Json(json!({})))
}

async fn session(State(app): State<AppState>, Bearer(token): Bearer) -> ApiResult<Json<SessionView>> {
    app.read(move |e, now| {
        let s = e.authenticate(&token, now)?;
        let account = e.account(&s.user_id).ok_or(EngineError::UnknownToken)?;
        Ok(Json(SessionView {
            login_time: s.login_time,
            expires_at: s.expires_at,
            account: account.into(),
        }))
    })
    .await
}

async fn list_jobs(State(app): State<AppState>, Bearer(token): Bearer) -> ApiResult<Json<Vec<JobView>>> {
    app.read(move |e, now| {
        let jobs = e.list_jobs(&token, now)?;
        let p = &e.state().persistent;
        Ok(Json(jobs.iter().map(|j| JobView::new(j, p)).collect()))
    })
    .await
}

/// Validates the wire form of a new job.
pub fn new_job(body: NewJobBody) -> ApiResult<NewJob> {
    let target_level = Priority::new(body.level)
        .map_err(|_| ApiError::bad_request("InvalidJob", format!("level {} is not in 1..=5", body.level)))?;
    let window = match body.window {
        None => None,
        Some(w) => Some(
            AvailabilityWindow::new(w.opens_at, w.closes_at)
                .ok_or_else(|| ApiError::bad_request("InvalidJob", "window closes before it opens"))?,
        ),
    };
    Ok(NewJob {
        target_level,
        job_type: body.job_type,
        description: body.description,
        window,
    })
}

async fn post_job(State(app): State<AppState>, Bearer(token): Bearer, body: Body<NewJobBody>) -> ApiResult<(StatusCode, Json<JobView>)> {
    let Json(body) = body?;
    let new = new_job(body)?;
    let view = app
        .write(move |e, now| {
            let job = e.post_job(&token, new, now)?;
            Ok(JobView::new(&job, &e.state().persistent))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn claim(State(app): State<AppState>, Bearer(token): Bearer, id: Result<Path<String>, PathRejection>) -> ApiResult<(StatusCode, Json<ClaimView>)> {
    let Path(id) = id?;
    let view = app
        .write(move |e, now| {
            let claim = e.submit_claim(&token, &JobId::from(id), now)?;
            Ok(ClaimView::new(&claim, &e.state().persistent))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn resolve(State(app): State<AppState>, Bearer(token): Bearer, id: Result<Path<String>, PathRejection>) -> ApiResult<Json<ResolutionView>> {
    let Path(id) = id?;
    app.write(move |e, now| {
        let r = e.resolve_claims(&token, &JobId::from(id), now)?;
        Ok(Json(ResolutionView::new(&r, &e.state().persistent)))
    })
    .await
}

async fn resolve_all(State(app): State<AppState>, Bearer(token): Bearer) -> ApiResult<Json<Vec<ResolutionView>>> {
    app.write(move |e, now| {
        let rs = e.resolve_all(&token, now)?;
        let p = &e.state().persistent;
        Ok(Json(rs.iter().map(|r| ResolutionView::new(r, p)).collect()))
    })
    .await
}

async fn complete(State(app): State<AppState>, Bearer(token): Bearer, id: Result<Path<String>, PathRejection>) -> ApiResult<Json<JobView>> {
    let Path(id) = id?;
    app.write(move |e, now| {
        let job = e.complete_job(&token, &JobId::from(id), now)?;
        Ok(Json(JobView::new(&job, &e.state().persistent)))
    })
    .await
}

fn parse_role(s: &str) -> ApiResult<Role> {
    s.parse()
        .map_err(|_| ApiError::bad_request("InvalidRole", format!("unknown role `{s}`")))
}

async fn assign_role(State(app): State<AppState>, Bearer(token): Bearer, body: Body<RoleBody>) -> ApiResult<Json<AccountView>> {
    let Json(body) = body?;
    let role = parse_role(&body.role)?;
    app.write(move |e, now| Ok(Json(AccountView::from(&e.assign_role(&token, &body.username, role, now)?))))
        .await
}

async fn revoke_role(State(app): State<AppState>, Bearer(token): Bearer, body: Body<RoleBody>) -> ApiResult<Json<AccountView>> {
    let Json(body) = body?;
    let role = parse_role(&body.role)?;
    app.write(move |e, now| Ok(Json(AccountView::from(&e.revoke_role(&token, &body.username, role, now)?))))
        .await
}

async fn approvable(State(app): State<AppState>, Bearer(token): Bearer) -> ApiResult<Json<Vec<PermissionView>>> {
    app.read(move |e, now| {
        let reqs = e.approvable_requests(&token, now)?;
        Ok(Json(reqs.iter().map(PermissionView::from).collect()))
    })
    .await
}

async fn request_permission(State(app): State<AppState>, Bearer(token): Bearer, body: Body<PermissionBody>) -> ApiResult<(StatusCode, Json<PermissionView>)> {
    let Json(body) = body?;
    let action: Action = body
        .action
        .parse()
        .map_err(|_| ApiError::bad_request("InvalidAction", format!("unknown action `{}`", body.action)))?;
    let req = app
        .write(move |e, now| Ok(e.request_permission(&token, action, now)?))
        .await?;
    Ok((StatusCode::CREATED, Json(PermissionView::from(&req))))
}

async fn approve(State(app): State<AppState>, Bearer(token): Bearer, id: Result<Path<String>, PathRejection>) -> ApiResult<Json<PermissionView>> {
    let Path(id) = id?;
    app.write(move |e, now| Ok(Json(PermissionView::from(&e.approve_permission(&token, &RequestId::from(id), now)?))))
        .await
}

/// Resolves a client-supplied backup name inside `dir`; no separators or
/// leading dots, so it can't escape.
pub fn backup_path(dir: &FsPath, name: &str) -> ApiResult<PathBuf> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(dir.join(name))
    } else {
        Err(ApiError::bad_request(
            "InvalidBackupName",
            "backup names may use letters, digits, '.', '_' and '-' and must not start with '.'",
        ))
    }
}

/// Authenticates `token` and cross-checks `action` without touching state.
pub fn require(e: &Engine, token: &SessionToken, action: Action, now: Timestamp) -> ApiResult<()> {
    e.authenticate(token, now)?;
    e.authorize(token, action, None, now)
        .into_result()
        .map_err(|r| EngineError::Denied(r).into())
}

pub fn unknown_backup(name: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "UnknownBackup", format!("no backup named `{name}`"))
}

async fn backup(State(app): State<AppState>, Bearer(token): Bearer, body: Body<BackupBody>) -> ApiResult<(StatusCode, Json<BackupView>)> {
    let Json(body) = body?;
    let path = backup_path(&app.backups_dir, &body.name)?;
    let view = app
        .write(move |e, now| {
            // authorize before touching the filesystem
            require(e, &token, Action::Backup, now)?;
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|err| {
                    tracing::error!(error = %err, "cannot create backup directory");
                    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageFailure", "storage failure")
                })?;
            }
            let doc = e.backup(&token, &path, now)?;
            Ok(BackupView::new(body.name, &doc))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn restore(State(app): State<AppState>, Bearer(token): Bearer, body: Body<BackupBody>) -> ApiResult<Json<BackupView>> {
    let Json(body) = body?;
    let path = backup_path(&app.backups_dir, &body.name)?;
    app.write(move |e, now| {
        require(e, &token, Action::Restore, now)?;
        if !path.is_file() {
            return Err(unknown_backup(&body.name));
        }
        let doc = e.restore(&token, &path, now)?;
        Ok(Json(BackupView::new(body.name, &doc)))
    })
    .await
}
