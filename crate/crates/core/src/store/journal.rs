//! Append-only journal sinks and replay.
//!
//! On disk the journal is newline-delimited JSON, one [`JournalRecord`] per
//! line. A record is acknowledged only after its line (including the
//! terminating newline) has been written and synced, so an unterminated
//! final line is a torn write and is discarded on load.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use crate::event::{Event, JournalRecord};
use crate::state::State;

use super::StoreError;

/// Destination for acknowledged events.
pub trait Journal: Send + Sync {
    /// Durably appends `record`. On error nothing must be considered written.
    fn append(&mut self, record: &JournalRecord) -> Result<(), StoreError>;

    /// Persists a point-in-time copy of the state covering events up to `sequence`.
    fn snapshot(&mut self, _state: &State, _sequence: u64) -> Result<(), StoreError> {
        Ok(())
    }
}

/// Shared switch used to simulate I/O failure in a [`MemoryJournal`].
#[derive(Debug, Clone, Default)]
pub struct FailSwitch(Arc<AtomicBool>);

impl FailSwitch {
    pub fn set(&self, failing: bool) {
        self.0.store(failing, Ordering::SeqCst);
    }

    pub fn is_set(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// In-memory journal. Cloning yields another handle to the same records.
#[derive(Debug, Clone, Default)]
pub struct MemoryJournal {
    records: Arc<Mutex<Vec<JournalRecord>>>,
    fail: FailSwitch,
}

impl MemoryJournal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fail_switch(&self) -> FailSwitch {
        self.fail.clone()
    }

    pub fn records(&self) -> Vec<JournalRecord> {
        self.records.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Journal for MemoryJournal {
    fn append(&mut self, record: &JournalRecord) -> Result<(), StoreError> {
        if self.fail.is_set() {
            return Err(StoreError::Io {
                context: "memory journal".into(),
                source: std::io::Error::other("simulated I/O failure"),
            });
        }
        self.records
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(record.clone());
        Ok(())
    }
}

/// Journal file inside a data directory.
#[derive(Debug)]
pub struct FileJournal {
    path: PathBuf,
    file: File,
    sync: bool,
    snapshot_path: Option<PathBuf>,
    // held for the lifetime of the journal
    _lock: Option<File>,
}

impl FileJournal {
    /// Opens `path` for appending, creating it if needed. With `sync` set
    /// every append is followed by `fdatasync`.
    pub fn open(path: impl Into<PathBuf>, sync: bool) -> Result<Self, StoreError> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| StoreError::io(format!("open {}", path.display()), e))?;
        Ok(FileJournal {
            path,
            file,
            sync,
            snapshot_path: None,
            _lock: None,
        })
    }

    pub(super) fn with_snapshot(mut self, path: PathBuf, lock: File) -> Self {
        self.snapshot_path = Some(path);
        self._lock = Some(lock);
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Journal for FileJournal {
    fn append(&mut self, record: &JournalRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(record).expect("journal records serialize");
        line.push(b'\n');
        let ctx = || format!("append to {}", self.path.display());
        self.file
            .write_all(&line)
            .map_err(|e| StoreError::io(ctx(), e))?;
        if self.sync {
            self.file.sync_data().map_err(|e| StoreError::io(ctx(), e))?;
        }
        Ok(())
    }

    fn snapshot(&mut self, state: &State, sequence: u64) -> Result<(), StoreError> {
        match &self.snapshot_path {
            Some(path) => super::write_snapshot(path, state, sequence),
            None => Ok(()),
        }
    }
}

/// Records read from a journal file plus the byte length of its valid prefix.
#[derive(Debug)]
pub struct JournalContents {
    pub records: Vec<JournalRecord>,
    pub valid_len: u64,
    pub torn_tail: bool,
}

fn decode_line(line: &str, line_no: usize) -> Result<JournalRecord, StoreError> {
    match serde_json::from_str::<JournalRecord>(line) {
        Ok(r) => Ok(r),
        Err(err) => {
            // distinguish a newer writer's event from plain corruption
            let value: Option<serde_json::Value> = serde_json::from_str(line).ok();
            let kind = value
                .as_ref()
                .and_then(|v| v.get("kind"))
                .and_then(|k| k.as_str());
            match kind {
                Some(kind) if !Event::is_known_kind(kind) => Err(StoreError::UnknownEventKind {
                    sequence: value
                        .as_ref()
                        .and_then(|v| v.get("sequence"))
                        .and_then(|s| s.as_u64())
                        .unwrap_or_default(),
                    kind: kind.to_owned(),
                }),
                _ => Err(StoreError::Corrupt {
                    line: line_no,
                    message: err.to_string(),
                }),
            }
        }
    }
}

/// Reads every complete record from a journal file. A missing file reads as empty.
pub fn read_journal(path: &Path) -> Result<JournalContents, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(JournalContents {
                records: vec![],
                valid_len: 0,
                torn_tail: false,
            })
        }
        Err(e) => return Err(StoreError::io(format!("open {}", path.display()), e)),
    };
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut valid_len = 0u64;
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader
            .read_line(&mut buf)
            .map_err(|e| StoreError::io(format!("read {}", path.display()), e))?;
        if n == 0 {
            return Ok(JournalContents {
                records,
                valid_len,
                torn_tail: false,
            });
        }
        line_no += 1;
        if !buf.ends_with('\n') {
            return Ok(JournalContents {
                records,
                valid_len,
                torn_tail: true,
            });
        }
        let line = buf.trim_end();
        if !line.is_empty() {
            records.push(decode_line(line, line_no)?);
        }
        valid_len += n as u64;
    }
}

/// Folds `records` onto `state`, which already covers events through
/// `last_sequence`. Records at or below `last_sequence` are skipped.
pub fn replay_onto<'a, I>(mut state: State, mut last_sequence: u64, records: I) -> Result<(State, u64), StoreError>
where
    I: IntoIterator<Item = &'a JournalRecord>,
{
    for record in records {
        if record.sequence <= last_sequence {
            continue;
        }
        if record.sequence != last_sequence + 1 {
            return Err(StoreError::GapDetected {
                expected: last_sequence + 1,
                found: record.sequence,
            });
        }
        state.apply(record)?;
        last_sequence = record.sequence;
    }
    Ok((state, last_sequence))
}

/// Rebuilds state from a journal that starts at sequence 1.
pub fn replay<'a, I>(records: I) -> Result<State, StoreError>
where
    I: IntoIterator<Item = &'a JournalRecord>,
{
    let mut iter = records.into_iter().peekable();
    if let Some(first) = iter.peek() {
        if first.sequence != 1 {
            return Err(StoreError::GapDetected {
                expected: 1,
                found: first.sequence,
            });
        }
    }
    replay_onto(State::default(), 0, iter).map(|(s, _)| s)
}
