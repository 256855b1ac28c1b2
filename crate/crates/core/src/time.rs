//! Timestamps and clocks.

use std::sync::Mutex;

use chrono::{DateTime, Duration, DurationRound, NaiveDateTime, SecondsFormat, TimeZone, Utc};

pub type Timestamp = DateTime<Utc>;

/// Display format used by the job board, e.g. `03/02/14 11:50`.
pub const BOARD_FORMAT: &str = "%d/%m/%y %H:%M";

/// Drops sub-millisecond precision; all stored timestamps are millisecond resolution.
pub fn to_millis(t: Timestamp) -> Timestamp {
    t.duration_trunc(Duration::milliseconds(1)).unwrap_or(t)
}

pub fn board_format(t: Timestamp) -> String {
    t.format(BOARD_FORMAT).to_string()
}

/// Parses a board-format timestamp as UTC.
pub fn parse_board(s: &str) -> Option<Timestamp> {
    NaiveDateTime::parse_from_str(s, BOARD_FORMAT)
        .ok()
        .map(|n| Utc.from_utc_datetime(&n))
}

/// ISO 8601 with millisecond precision and a `Z` suffix.
pub fn iso(t: Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn parse_iso(s: &str) -> Option<Timestamp> {
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        to_millis(Utc::now())
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<Timestamp>);

impl ManualClock {
    pub fn new(start: Timestamp) -> Self {
        ManualClock(Mutex::new(start))
    }

    pub fn set(&self, t: Timestamp) {
        *self.0.lock().unwrap_or_else(|e| e.into_inner()) = t;
    }

    pub fn advance(&self, by: Duration) {
        let mut guard = self.0.lock().unwrap_or_else(|e| e.into_inner());
        *guard += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        *self.0.lock().unwrap_or_else(|e| e.into_inner())
    }
}
