//! Persistence: journal, snapshots, data directory and XML backups.

pub mod backup;
pub mod journal;

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{ApplyError, State};

pub use backup::{BackupDocument, BackupError, FORMAT_VERSION};
pub use journal::{read_journal, replay, replay_onto, FailSwitch, FileJournal, Journal, MemoryJournal};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("journal line {line} is corrupt: {message}")]
    Corrupt { line: usize, message: String },
    #[error("journal gap: expected sequence {expected}, found {found}")]
    GapDetected { expected: u64, found: u64 },
    #[error("unknown event kind `{kind}` at sequence {sequence}")]
    UnknownEventKind { sequence: u64, kind: String },
    #[error("snapshot is unreadable: {0}")]
    BadSnapshot(String),
    #[error("data directory {0} is in use by another process")]
    Locked(PathBuf),
    #[error(transparent)]
    Apply(#[from] ApplyError),
}

impl StoreError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        StoreError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } | StoreError::Locked(_) => "StorageFailure",
            StoreError::Corrupt { .. } | StoreError::BadSnapshot(_) => "ParseError",
            StoreError::GapDetected { .. } => "GapDetected",
            StoreError::UnknownEventKind { .. } => "UnknownEventKind",
            StoreError::Apply(_) => "InconsistentJournal",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    sequence: u64,
    state: State,
}

pub(crate) fn write_snapshot(path: &Path, state: &State, sequence: u64) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    let body = serde_json::to_vec(&Snapshot {
        sequence,
        state: state.clone(),
    })
    .expect("state serializes");
    let ctx = || format!("write snapshot {}", path.display());
    let mut f = File::create(&tmp).map_err(|e| StoreError::io(ctx(), e))?;
    f.write_all(&body).map_err(|e| StoreError::io(ctx(), e))?;
    f.sync_all().map_err(|e| StoreError::io(ctx(), e))?;
    fs::rename(&tmp, path).map_err(|e| StoreError::io(ctx(), e))
}

fn read_snapshot(path: &Path) -> Result<Option<(State, u64)>, StoreError> {
    match fs::read(path) {
        Ok(bytes) => {
            let snap: Snapshot = serde_json::from_slice(&bytes)
                .map_err(|e| StoreError::BadSnapshot(e.to_string()))?;
            Ok(Some((snap.state, snap.sequence)))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(StoreError::io(format!("read {}", path.display()), e)),
    }
}

/// A data directory holding `journal.ndjson`, an optional `snapshot.json`
/// and a lock file. Only one process may hold it open.
#[derive(Debug)]
pub struct DataDir {
    root: PathBuf,
    lock: File,
}

impl DataDir {
    pub const JOURNAL: &'static str = "journal.ndjson";
    pub const SNAPSHOT: &'static str = "snapshot.json";
    const LOCK: &'static str = "LOCK";

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)
            .map_err(|e| StoreError::io(format!("create {}", root.display()), e))?;
        let lock_path = root.join(Self::LOCK);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| StoreError::io(format!("open {}", lock_path.display()), e))?;
        match lock.try_lock() {
            Ok(()) => Ok(DataDir { root, lock }),
            Err(fs::TryLockError::WouldBlock) => Err(StoreError::Locked(root)),
            Err(fs::TryLockError::Error(e)) => Err(StoreError::io("lock data directory", e)),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn journal_path(&self) -> PathBuf {
        self.root.join(Self::JOURNAL)
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.root.join(Self::SNAPSHOT)
    }

    /// Loads the snapshot (if any) and replays the journal tail over it.
    /// A torn final journal line is cut off so later appends start clean.
    pub fn load(&self) -> Result<(State, u64), StoreError> {
        let (state, seq) = read_snapshot(&self.snapshot_path())?.unwrap_or_default();
        let contents = read_journal(&self.journal_path())?;
        if contents.torn_tail {
            let path = self.journal_path();
            let f = OpenOptions::new()
                .write(true)
                .open(&path)
                .map_err(|e| StoreError::io(format!("open {}", path.display()), e))?;
            f.set_len(contents.valid_len)
                .map_err(|e| StoreError::io(format!("truncate {}", path.display()), e))?;
        }
        if seq == 0 {
            if let Some(first) = contents.records.first() {
                if first.sequence != 1 {
                    return Err(StoreError::GapDetected {
                        expected: 1,
                        found: first.sequence,
                    });
                }
            }
        }
        replay_onto(state, seq, &contents.records)
    }

    /// Turns the directory into the engine's journal sink.
    pub fn into_journal(self, sync: bool) -> Result<FileJournal, StoreError> {
        let journal = FileJournal::open(self.journal_path(), sync)?;
        Ok(journal.with_snapshot(self.snapshot_path(), self.lock))
    }
}
