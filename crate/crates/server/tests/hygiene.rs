//! Raw passwords and session tokens must not reach disk or logs.

use std::io::Write;
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use jobgate_core::time::parse_board;
use jobgate_core::ManualClock;
use jobgate_server::{app, open_engine, AppState, BootstrapAdmin, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const ADMIN_PW: &str = "Adm1n-Zebra-Quartz";
const USER_PW: &str = "Us3r-Marmot-Violin";

#[derive(Clone, Default)]
struct Captured(Arc<Mutex<Vec<u8>>>);

impl Write for Captured {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

async fn send(router: &axum::Router, path: &str, token: Option<&str>, body: Value) -> (StatusCode, Value) {
    let mut req = Request::post(path).header("content-type", "application/json");
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let resp = router
        .clone()
        .oneshot(req.body(Body::from(body.to_string())).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn scan(dir: &std::path::Path, needles: &[&str]) -> usize {
    let mut files = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files += scan(&path, needles);
            continue;
        }
        let bytes = std::fs::read(&path).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        for n in needles {
            assert!(!text.contains(n), "{} contains a secret", path.display());
        }
        files += 1;
    }
    files
}

#[tokio::test]
async fn secrets_stay_out_of_journal_backup_and_logs() {
    let logs = Captured::default();
    let sink = logs.clone();
    tracing_subscriber::fmt()
        .with_max_level(tracing::Level::TRACE)
        .with_ansi(false)
        .with_writer(move || sink.clone())
        .init();

    let dir = tempfile::tempdir().unwrap();
    let config = ServerConfig {
        data_dir: dir.path().join("data"),
        hash_memory_kib: 8,
        hash_iterations: 1,
        snapshot_every: 4,
        bootstrap_admin: Some(BootstrapAdmin {
            username: "ruhi".into(),
            password: ADMIN_PW.into(),
        }),
        ..ServerConfig::default()
    };
    let clock = Arc::new(ManualClock::new(parse_board("02/02/14 09:00").unwrap()));
    let engine = open_engine(&config, clock.as_ref()).unwrap();
    let router = app(AppState::new(engine, clock.clone(), config.backups_dir()), &config);

    let (_, admin) = send(&router, "/login", None, json!({"username": "ruhi", "password": ADMIN_PW})).await;
    let admin = admin["token"].as_str().unwrap().to_owned();
    let (s, _) = send(&router, "/accounts", None, json!({"username": "tom", "password": USER_PW})).await;
    assert_eq!(s, StatusCode::CREATED);
    // a failed login with the password in the username field
    send(&router, "/login", None, json!({"username": USER_PW, "password": USER_PW})).await;
    let (_, tom) = send(&router, "/login", None, json!({"username": "tom", "password": USER_PW})).await;
    let tom = tom["token"].as_str().unwrap().to_owned();
    let (_, job) = send(&router, "/jobs", Some(&admin), json!({"level": 5, "type": "t"})).await;
    let job = job["job_id"].as_str().unwrap().to_owned();
    send(&router, &format!("/jobs/{job}/claim"), Some(&tom), json!({})).await;
    let (s, _) = send(&router, "/admin/backup", Some(&admin), json!({"name": "b.xml"})).await;
    assert_eq!(s, StatusCode::CREATED);
    send(&router, "/logout", Some(&tom), json!({})).await;

    let files = scan(dir.path(), &[ADMIN_PW, USER_PW, &admin, &tom]);
    assert!(files >= 3, "expected journal, snapshot and backup, saw {files}");
    assert!(config.backups_dir().join("b.xml").is_file());

    let logs = String::from_utf8(logs.0.lock().unwrap().clone()).unwrap();
    assert!(logs.contains("/jobs"), "request tracing should be on: {logs}");
    for secret in [ADMIN_PW, USER_PW, &admin, &tom] {
        assert!(!logs.contains(secret), "logs leak a secret");
    }

    // restart: the journal replays and the bootstrap admin isn't duplicated
    drop(router);
    let engine = open_engine(&config, clock.as_ref()).unwrap();
    let admins = engine
        .state()
        .persistent
        .accounts
        .values()
        .filter(|a| a.is_admin())
        .count();
    assert_eq!(admins, 1);
    assert!(engine.job(&job.as_str().into()).is_some());
}
