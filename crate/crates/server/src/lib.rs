//! HTTP + JSON service over the jobgate engine.
//!
//! Every endpoint maps onto one engine operation; errors come back as
//! `{"code", "message"}` with a status fixed per code (see [`error`]).

pub mod app;
pub mod config;
pub mod error;
pub mod wire;

use std::future::Future;
use std::sync::Arc;

use axum::Router;
use jobgate_core::{Clock, Engine, EngineError, SystemClock};
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

pub use app::{router, AppState};
pub use config::{BootstrapAdmin, ConfigError, ServerConfig};
pub use error::ApiError;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: std::net::SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Opens the data directory and creates the configured admin if the store
/// has none yet.
pub fn open_engine(config: &ServerConfig, clock: &dyn Clock) -> Result<Engine, EngineError> {
    let mut engine = Engine::open(&config.data_dir, config.engine_config(), config.sync_journal)?;
    if let Some(admin) = &config.bootstrap_admin {
        match engine.bootstrap_admin(&admin.username, &admin.password, clock.now()) {
            Ok(_) => tracing::info!(username = %admin.username, "created bootstrap admin"),
            Err(EngineError::AlreadyInitialized) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(engine)
}

/// The full application: API routes plus the optional static console,
/// CORS and request tracing.
pub fn app(state: AppState, config: &ServerConfig) -> Router {
    let mut app = router(state);
    if let Some(dir) = &config.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    if config.cors {
        app = app.layer(CorsLayer::permissive());
    }
    app.layer(TraceLayer::new_for_http())
}

/// Runs the service until `shutdown` resolves.
pub async fn serve(config: ServerConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let engine = open_engine(&config, clock.as_ref())?;
    let state = AppState::new(engine, clock, config.backups_dir());
    let listener = TcpListener::bind(config.listen)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.listen,
            source,
        })?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), "listening");
    run(listener, app(state, &config), shutdown).await
}

/// Serves `router` on an already bound listener until `shutdown` resolves.
pub async fn run(listener: TcpListener, router: Router, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
    axum::serve(listener, router)
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}
