//! Service configuration: an optional TOML file, then `JOBGATE_*`
//! environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use jobgate_core::{EngineConfig, HashCost, TransactionPolicy};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid value for {var}: `{value}`")]
    Env { var: &'static str, value: String },
}

#[derive(Clone, PartialEq, Eq, Deserialize)]
pub struct BootstrapAdmin {
    pub username: String,
    pub password: String,
}

impl std::fmt::Debug for BootstrapAdmin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BootstrapAdmin")
            .field("username", &self.username)
            .field("password", &"<redacted>")
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub session_ttl_secs: i64,
    pub max_per_day: u32,
    /// fsync the journal after every append.
    pub sync_journal: bool,
    pub snapshot_every: u64,
    pub hash_memory_kib: u32,
    pub hash_iterations: u32,
    /// Created on startup if the store has no admin yet.
    pub bootstrap_admin: Option<BootstrapAdmin>,
    /// Directory of static assets served at `/`, e.g. a built console.
    pub static_dir: Option<PathBuf>,
    /// Allow cross-origin requests from any origin.
    pub cors: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        let engine = EngineConfig::default();
        ServerConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("jobgate-data"),
            session_ttl_secs: engine.session_ttl_secs,
            max_per_day: engine.policy.max_per_day,
            sync_journal: true,
            snapshot_every: engine.snapshot_every,
            hash_memory_kib: engine.hash_cost.memory_kib,
            hash_iterations: engine.hash_cost.iterations,
            bootstrap_admin: None,
            static_dir: None,
            cors: false,
        }
    }
}

impl ServerConfig {
    /// Reads `path` (if given) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    /// Overrides fields from variables found by `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(var: &'static str, value: String) -> Result<T, ConfigError> {
            value.trim().parse().map_err(|_| ConfigError::Env { var, value })
        }
        fn flag(var: &'static str, value: String) -> Result<bool, ConfigError> {
            match value.trim().to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(ConfigError::Env { var, value }),
            }
        }

        if let Some(v) = lookup("JOBGATE_LISTEN") {
            self.listen = parse("JOBGATE_LISTEN", v)?;
        }
        if let Some(v) = lookup("JOBGATE_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = lookup("JOBGATE_SESSION_TTL_SECS") {
            self.session_ttl_secs = parse("JOBGATE_SESSION_TTL_SECS", v)?;
        }
        if let Some(v) = lookup("JOBGATE_MAX_PER_DAY") {
            self.max_per_day = parse("JOBGATE_MAX_PER_DAY", v)?;
        }
        if let Some(v) = lookup("JOBGATE_SYNC_JOURNAL") {
            self.sync_journal = flag("JOBGATE_SYNC_JOURNAL", v)?;
        }
        if let Some(v) = lookup("JOBGATE_STATIC_DIR") {
            self.static_dir = Some(v.into());
        }
        if let Some(v) = lookup("JOBGATE_CORS") {
            self.cors = flag("JOBGATE_CORS", v)?;
        }
        match (lookup("JOBGATE_ADMIN_USERNAME"), lookup("JOBGATE_ADMIN_PASSWORD")) {
            (Some(username), Some(password)) => {
                self.bootstrap_admin = Some(BootstrapAdmin { username, password });
            }
            (None, Some(password)) => match &mut self.bootstrap_admin {
                Some(admin) => admin.password = password,
                None => {
                    return Err(ConfigError::Env {
                        var: "JOBGATE_ADMIN_USERNAME",
                        value: String::new(),
                    })
                }
            },
            (Some(username), None) => match &mut self.bootstrap_admin {
                Some(admin) => admin.username = username,
                None => {
                    return Err(ConfigError::Env {
                        var: "JOBGATE_ADMIN_PASSWORD",
                        value: String::new(),
                    })
                }
            },
            (None, None) => {}
        }
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            session_ttl_secs: self.session_ttl_secs,
            policy: TransactionPolicy {
                max_per_day: self.max_per_day,
            },
            hash_cost: HashCost {
                memory_kib: self.hash_memory_kib,
                iterations: self.hash_iterations,
            },
            snapshot_every: self.snapshot_every,
        }
    }

    pub fn backups_dir(&self) -> PathBuf {
        self.data_dir.join("backups")
    }
}
