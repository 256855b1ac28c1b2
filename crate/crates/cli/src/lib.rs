//! `jobgate` operator tool.
//!
//! Commands run in-process against a data directory unless `--server-url`
//! is given, in which case they go through the HTTP API. Either way a
//! failure prints the API error code and exits 1; usage errors exit 2.

pub mod backend;
pub mod render;

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use backend::{Backend, Credentials, Local, Remote};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use jobgate_core::store::{read_journal, replay, DataDir};
use jobgate_core::time::{parse_board, parse_iso};
use jobgate_core::{Clock, Engine, EngineError, Role, Timestamp};
use jobgate_server::wire::{NewJobBody, WindowBody};
use jobgate_server::{ApiError, ConfigError, ServerConfig};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {}", .0.code, .0.message)]
    Api(ApiError),
    #[error("Unreachable: {0}")]
    Transport(String),
    #[error("{0}")]
    Usage(String),
    #[error("ConfigError: {0}")]
    Config(#[from] ConfigError),
    #[error("StorageFailure: {0}")]
    Io(String),
    #[error("ReplayMismatch: replaying the journal twice gave different states")]
    ReplayMismatch,
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::Api(e)
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Api(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "jobgate", version, about = "Operate a jobgate job board")]
pub struct Cli {
    /// Service config file (TOML); `JOBGATE_*` variables override it.
    #[arg(long, global = true, env = "JOBGATE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Data directory for local commands.
    #[arg(long, global = true, env = "JOBGATE_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// Send commands to this service instead of opening the data directory.
    #[arg(long, global = true, env = "JOBGATE_SERVER_URL")]
    pub server_url: Option<String>,
    /// Session token of an existing login.
    #[arg(long, global = true, env = "JOBGATE_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Log in as this user when no token is given.
    #[arg(long, global = true, env = "JOBGATE_USERNAME")]
    pub username: Option<String>,
    #[arg(long, global = true, env = "JOBGATE_PASSWORD", hide_env_values = true)]
    pub password: Option<String>,
    #[arg(long, global = true, value_enum, default_value = "table", env = "JOBGATE_OUTPUT")]
    pub output: Output,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<SocketAddr>,
    },
    /// Create the first admin account from --username and --password.
    Init,
    /// Create an account (Executive); optionally promote it.
    AddUser {
        name: String,
        #[arg(long, env = "JOBGATE_NEW_USER_PASSWORD", hide_env_values = true)]
        user_password: String,
        /// Also grant this role and drop Executive (needs admin credentials).
        #[arg(long)]
        role: Option<Role>,
    },
    /// Grant a role, or take one away with --revoke.
    AssignRole {
        name: String,
        role: Role,
        #[arg(long)]
        revoke: bool,
    },
    PostJob {
        /// Target level, 1 (Admin) to 5 (Executive).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        level: u8,
        #[arg(long = "type")]
        job_type: String,
        #[arg(long, default_value = "")]
        description: String,
        /// Start of the availability window (RFC 3339 or "DD/MM/YY HH:MM", UTC).
        #[arg(long, value_parser = parse_time, requires = "closes")]
        opens: Option<Timestamp>,
        #[arg(long, value_parser = parse_time, requires = "opens")]
        closes: Option<Timestamp>,
    },
    ListJobs,
    Claim {
        job: String,
    },
    /// Pick the winning claim for a job, or for every job with --all.
    #[command(group(ArgGroup::new("target").required(true).args(["job", "all"])))]
    Resolve {
        job: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Write a backup into the data directory's backups folder.
    Backup {
        name: String,
    },
    /// Replace all state with a backup from the backups folder.
    Restore {
        name: String,
    },
    /// Replay the journal twice and compare the resulting state hashes.
    ReplayCheck,
}

fn parse_time(s: &str) -> Result<Timestamp, String> {
    parse_iso(s)
        .or_else(|| parse_board(s))
        .ok_or_else(|| format!("`{s}` is neither RFC 3339 nor DD/MM/YY HH:MM"))
}

/// Everything a command needs from outside the argument list.
pub struct Context {
    pub clock: Arc<dyn Clock>,
}

impl Cli {
    fn server_config(&self) -> Result<ServerConfig, CliError> {
        let mut config = ServerConfig::load(self.config.as_deref())?;
        if let Some(dir) = &self.data_dir {
            config.data_dir = dir.clone();
        }
        Ok(config)
    }

    fn credentials(&self) -> Option<Credentials> {
        match (&self.username, &self.password) {
            (Some(u), Some(p)) => Some(Credentials {
                username: u.clone(),
                password: p.clone(),
            }),
            _ => None,
        }
    }

    fn backend(&self, ctx: &Context) -> Result<Box<dyn Backend>, CliError> {
        if let Some(url) = &self.server_url {
            return Ok(Box::new(Remote::new(url, self.credentials(), self.token.clone())?));
        }
        let config = self.server_config()?;
        let engine = Engine::open(&config.data_dir, config.engine_config(), config.sync_journal)?;
        Ok(Box::new(Local::new(
            engine,
            ctx.clock.clone(),
            config.backups_dir(),
            self.credentials(),
            self.token.clone(),
        )))
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Output, value: &T, table: impl FnOnce(&T) -> String) -> Result<(), CliError> {
    let text = match format {
        Output::Table => table(value),
        Output::Json => serde_json::to_string_pretty(value).expect("serializable") + "\n",
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct ReplayReport {
    events: usize,
    torn_tail: bool,
    first: String,
    second: String,
    matches: bool,
}

fn replay_check(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = cli.server_config()?;
    let path = config.data_dir.join(DataDir::JOURNAL);
    let contents = read_journal(&path).map_err(EngineError::from)?;
    let first = replay(&contents.records).map_err(EngineError::from)?.canonical_hash();
    let second = replay(&contents.records).map_err(EngineError::from)?.canonical_hash();
    let report = ReplayReport {
        events: contents.records.len(),
        torn_tail: contents.torn_tail,
        matches: first == second,
        first,
        second,
    };
    emit(out, cli.output, &report, |r| {
        format!(
            "events: {}{}\nreplay 1: {}\nreplay 2: {}\n{}\n",
            r.events,
            if r.torn_tail { " (torn final record ignored)" } else { "" },
            r.first,
            r.second,
            if r.matches { "hashes match" } else { "HASHES DIFFER" }
        )
    })?;
    if report.matches {
        Ok(())
    } else {
        Err(CliError::ReplayMismatch)
    }
}

fn serve(cli: &Cli, listen: Option<SocketAddr>) -> Result<(), CliError> {
    let mut config = cli.server_config()?;
    if let Some(addr) = listen {
        config.listen = addr;
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    rt.block_on(async {
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        jobgate_server::serve(config, shutdown).await
    })
    .map_err(|e| match e {
        jobgate_server::ServeError::Engine(e) => e.into(),
        other => CliError::Io(other.to_string()),
    })
}

fn init(cli: &Cli, ctx: &Context, out: &mut dyn Write) -> Result<(), CliError> {
    let creds = cli
        .credentials()
        .ok_or_else(|| CliError::Usage("init needs --username and --password".into()))?;
    let config = cli.server_config()?;
    let mut engine = Engine::open(&config.data_dir, config.engine_config(), config.sync_journal)?;
    let account = engine.bootstrap_admin(&creds.username, &creds.password, ctx.clock.now())?;
    emit(out, cli.output, &jobgate_server::wire::AccountView::from(&account), render::account)
}

/// Runs a parsed command.
pub fn run(cli: &Cli, ctx: &Context, out: &mut dyn Write) -> Result<(), CliError> {
    let mut backend = match &cli.command {
        Command::Serve { listen } => return serve(cli, *listen),
        Command::Init => return init(cli, ctx, out),
        Command::ReplayCheck => return replay_check(cli, out),
        _ => cli.backend(ctx)?,
    };
    let result = dispatch(cli, backend.as_mut(), out);
    let finished = backend.finish();
    result.and(finished)
}

fn dispatch(cli: &Cli, b: &mut dyn Backend, out: &mut dyn Write) -> Result<(), CliError> {
    let fmt = cli.output;
    match &cli.command {
        Command::AddUser {
            name,
            user_password,
            role,
        } => {
            let mut account = b.create_account(name, user_password)?;
            if let Some(role) = role.filter(|r| *r != Role::Executive) {
                b.set_role(name, role, false)?;
                account = b.set_role(name, Role::Executive, true)?;
            }
            emit(out, fmt, &account, render::account)
        }
        Command::AssignRole { name, role, revoke } => {
            let account = b.set_role(name, *role, *revoke)?;
            emit(out, fmt, &account, render::account)
        }
        Command::PostJob {
            level,
            job_type,
            description,
            opens,
            closes,
        } => {
            let window = opens.zip(*closes).map(|(opens_at, closes_at)| WindowBody { opens_at, closes_at });
            let job = b.post_job(NewJobBody {
                level: *level,
                job_type: job_type.clone(),
                description: description.clone(),
                window,
            })?;
            emit(out, fmt, &job, render::job)
        }
        Command::ListJobs => {
            let jobs = b.list_jobs()?;
            emit(out, fmt, &jobs, |j| render::board(j))
        }
        Command::Claim { job } => {
            let claim = b.claim(job)?;
            emit(out, fmt, &claim, render::claim)
        }
        Command::Resolve { job: Some(job), .. } => {
            let r = b.resolve(job)?;
            emit(out, fmt, &r, render::resolution)
        }
        Command::Resolve { job: None, .. } => {
            let rs = b.resolve_all()?;
            emit(out, fmt, &rs, |rs| {
                if rs.is_empty() {
                    "no jobs with pending claims\n".to_owned()
                } else {
                    rs.iter().map(render::resolution).collect()
                }
            })
        }
        Command::Backup { name } => {
            let v = b.backup(name)?;
            emit(out, fmt, &v, |v| render::backup("backup", v))
        }
        Command::Restore { name } => {
            let v = b.restore(name)?;
            emit(out, fmt, &v, |v| render::backup("restored", v))
        }
        Command::Serve { .. } | Command::Init | Command::ReplayCheck => unreachable!("handled in run"),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Errors go to `err` as `error: <Code>: <message>`.
pub fn execute<I, T>(args: I, ctx: &Context, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let target: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match run(&cli, ctx, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_accept_both_formats() {
        assert_eq!(parse_time("02/02/14 17:16"), parse_time("2014-02-02T17:16:00Z"));
        assert!(parse_time("yesterday").is_err());
    }

    #[test]
    fn resolve_needs_a_target() {
        assert!(Cli::try_parse_from(["jobgate", "resolve"]).is_err());
        assert!(Cli::try_parse_from(["jobgate", "resolve", "job-000001", "--all"]).is_err());
        assert!(Cli::try_parse_from(["jobgate", "resolve", "--all"]).is_ok());
    }

    #[test]
    fn roles_parse_case_insensitively() {
        let cli = Cli::try_parse_from(["jobgate", "assign-role", "sa", "president"]).unwrap();
        assert!(matches!(cli.command, Command::AssignRole { role: Role::President, .. }));
    }

    #[test]
    fn usage_errors_exit_2() {
        let ctx = Context {
            clock: Arc::new(jobgate_core::SystemClock),
        };
        let (mut out, mut err) = (vec![], vec![]);
        let code = execute(["jobgate", "post-job", "--level", "9", "--type", "x"], &ctx, &mut out, &mut err);
        assert_eq!(code, 2);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }
}
