#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use jobgate_core::account::HashCost;
use jobgate_core::store::MemoryJournal;
use jobgate_core::time::parse_board;
use jobgate_core::{Engine, EngineConfig, ManualClock, Role, Timestamp, TransactionPolicy};
use jobgate_server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

pub const PASSWORD: &str = "s3cret-pass";

pub fn at(s: &str) -> Timestamp {
    parse_board(s).unwrap()
}

pub fn config(max_per_day: u32) -> EngineConfig {
    EngineConfig {
        hash_cost: HashCost::MINIMAL,
        snapshot_every: 0,
        policy: TransactionPolicy { max_per_day },
        ..EngineConfig::default()
    }
}

/// A router over an in-memory engine with admin `ruhi`, driven by a
/// manual clock.
pub struct TestApp {
    pub router: Router,
    pub clock: Arc<ManualClock>,
    pub state: AppState,
    pub journal: MemoryJournal,
    pub backups: tempfile::TempDir,
    pub admin: String,
}

impl TestApp {
    pub async fn new(start: Timestamp) -> Self {
        Self::with_limit(start, 50).await
    }

    pub async fn with_limit(start: Timestamp, max_per_day: u32) -> Self {
        let journal = MemoryJournal::new();
        let mut engine = Engine::new(config(max_per_day), journal.clone());
        engine.bootstrap_admin("ruhi", PASSWORD, start).unwrap();
        let clock = Arc::new(ManualClock::new(start));
        let backups = tempfile::tempdir().unwrap();
        let state = AppState::new(engine, clock.clone(), backups.path());
        let mut app = TestApp {
            router: router(state.clone()),
            clock,
            state,
            journal,
            backups,
            admin: String::new(),
        };
        app.admin = app.login("ruhi").await;
        app
    }

    pub async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    pub async fn get(&self, path: &str, token: &str) -> (StatusCode, Value) {
        self.call(Method::GET, path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> (StatusCode, Value) {
        self.call(Method::POST, path, Some(token), Some(body)).await
    }

    pub async fn login(&self, name: &str) -> String {
        let (status, body) = self
            .call(Method::POST, "/login", None, Some(json!({"username": name, "password": PASSWORD})))
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        body["token"].as_str().unwrap().to_owned()
    }

    /// Creates `name` over HTTP and leaves it holding exactly `role`.
    pub async fn user(&self, name: &str, role: Role) {
        let (status, body) = self
            .call(Method::POST, "/accounts", None, Some(json!({"username": name, "password": PASSWORD})))
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        if role != Role::Executive {
            let (s, b) = self
                .post("/roles/assign", &self.admin, json!({"username": name, "role": role.as_str()}))
                .await;
            assert_eq!(s, StatusCode::OK, "{b}");
            let (s, b) = self
                .post("/roles/revoke", &self.admin, json!({"username": name, "role": "Executive"}))
                .await;
            assert_eq!(s, StatusCode::OK, "{b}");
        }
    }

    pub async fn post_job(&self, token: &str, level: u8, ty: &str) -> String {
        let (status, body) = self
            .post("/jobs", token, json!({"level": level, "type": ty, "description": "d"}))
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["job_id"].as_str().unwrap().to_owned()
    }
}
