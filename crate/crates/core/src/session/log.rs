//! Session persistence.
//!
//! `events.jsonl`: the first line is a [`LogHeader`] (schema, version,
//! config and the full trial plan), each further line one
//! [`EventRecord`]. Lines are only ever appended. `summary.json` is a small
//! fixed-size snapshot rewritten at phase boundaries.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::events::EventRecord;
use super::state::{Phase, SessionState};
use super::{InterfaceKind, SessionConfig, SessionError};
use crate::stimulus::TrialSpec;

pub const LOG_SCHEMA: &str = "crm-session-log";
pub const LOG_VERSION: u32 = 1;
pub const LOG_FILE: &str = "events.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub version: u32,
    pub config: SessionConfig,
    pub trials: Vec<TrialSpec>,
}

impl LogHeader {
    pub fn new(config: SessionConfig, trials: Vec<TrialSpec>) -> Self {
        LogHeader { schema: LOG_SCHEMA.into(), version: LOG_VERSION, config, trials }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub schema: String,
    pub session_id: String,
    pub participant: String,
    pub interface: InterfaceKind,
    pub phase: Phase,
    pub training_done: usize,
    pub experimental_done: usize,
    pub experimental_correct: usize,
    pub events: u64,
    pub updated_at: f64,
}

impl SessionSummary {
    pub fn of(config: &SessionConfig, state: &SessionState) -> Self {
        SessionSummary {
            schema: "crm-session-summary".into(),
            session_id: config.session_id.clone(),
            participant: config.participant.clone(),
            interface: config.interface,
            phase: state.phase,
            training_done: state.training.total,
            experimental_done: state.experimental.total,
            experimental_correct: state.experimental.correct,
            events: state.events,
            updated_at: state.last_t,
        }
    }
}

pub trait EventSink: Send {
    fn begin(&mut self, header: &LogHeader) -> Result<(), SessionError>;
    fn append(&mut self, record: &EventRecord) -> Result<(), SessionError>;
    fn phase_boundary(&mut self, _summary: &SessionSummary) -> Result<(), SessionError> {
        Ok(())
    }
}

fn json_line<T: Serialize>(value: &T) -> Result<String, SessionError> {
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    Ok(line)
}

/// Append-only file sink in a per-session directory.
#[derive(Debug)]
pub struct JsonlSink {
    dir: PathBuf,
    log: File,
    bytes_written: u64,
    last_append_bytes: usize,
    summaries_written: usize,
}

impl JsonlSink {
    /// Open a fresh log under `dir`. An existing log means the session id
    /// was already used.
    pub fn create(dir: impl AsRef<Path>) -> Result<Self, SessionError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let log = OpenOptions::new().append(true).create_new(true).open(dir.join(LOG_FILE)).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                SessionError::DuplicateSession(dir.display().to_string())
            } else {
                e.into()
            }
        })?;
        Ok(JsonlSink { dir, log, bytes_written: 0, last_append_bytes: 0, summaries_written: 0 })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes_written
    }

    pub fn last_append_bytes(&self) -> usize {
        self.last_append_bytes
    }

    pub fn summaries_written(&self) -> usize {
        self.summaries_written
    }

    fn write_line(&mut self, line: &str) -> Result<(), SessionError> {
        self.log.write_all(line.as_bytes())?;
        self.bytes_written += line.len() as u64;
        self.last_append_bytes = line.len();
        Ok(())
    }
}

impl EventSink for JsonlSink {
    fn begin(&mut self, header: &LogHeader) -> Result<(), SessionError> {
        self.write_line(&json_line(header)?)
    }

    fn append(&mut self, record: &EventRecord) -> Result<(), SessionError> {
        self.write_line(&json_line(record)?)
    }

    fn phase_boundary(&mut self, summary: &SessionSummary) -> Result<(), SessionError> {
        let tmp = self.dir.join(format!("{SUMMARY_FILE}.tmp"));
        std::fs::write(&tmp, serde_json::to_vec_pretty(summary)?)?;
        std::fs::rename(tmp, self.dir.join(SUMMARY_FILE))?;
        self.summaries_written += 1;
        Ok(())
    }
}

#[derive(Debug, Default)]
struct MemoryLog {
    lines: Vec<String>,
    summaries: Vec<SessionSummary>,
}

/// In-memory sink holding the serialized lines. Clones share storage.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    inner: Arc<Mutex<MemoryLog>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lines(&self) -> Vec<String> {
        self.inner.lock().expect("memory sink poisoned").lines.clone()
    }

    pub fn summaries(&self) -> Vec<SessionSummary> {
        self.inner.lock().expect("memory sink poisoned").summaries.clone()
    }

    /// The stored log as one JSONL document.
    pub fn contents(&self) -> String {
        self.lines().concat()
    }
}

impl EventSink for MemorySink {
    fn begin(&mut self, header: &LogHeader) -> Result<(), SessionError> {
        let line = json_line(header)?;
        self.inner.lock().expect("memory sink poisoned").lines.push(line);
        Ok(())
    }

    fn append(&mut self, record: &EventRecord) -> Result<(), SessionError> {
        let line = json_line(record)?;
        self.inner.lock().expect("memory sink poisoned").lines.push(line);
        Ok(())
    }

    fn phase_boundary(&mut self, summary: &SessionSummary) -> Result<(), SessionError> {
        self.inner.lock().expect("memory sink poisoned").summaries.push(summary.clone());
        Ok(())
    }
}

/// Parse a log written by [`JsonlSink`] or [`MemorySink`].
pub fn read_log(reader: impl Read) -> Result<(LogHeader, Vec<EventRecord>), SessionError> {
    let mut lines = BufReader::new(reader).lines();
    let first = lines.next().ok_or_else(|| SessionError::MalformedLog("empty log".into()))??;
    let header: LogHeader =
        serde_json::from_str(&first).map_err(|e| SessionError::MalformedLog(format!("header: {e}")))?;
    if header.schema != LOG_SCHEMA || header.version != LOG_VERSION {
        return Err(SessionError::MalformedLog(format!("unsupported schema {} v{}", header.schema, header.version)));
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| SessionError::MalformedLog(format!("line {}: {e}", n + 2)))?,
        );
    }
    Ok((header, records))
}

pub fn read_log_file(path: impl AsRef<Path>) -> Result<(LogHeader, Vec<EventRecord>), SessionError> {
    read_log(File::open(path)?)
}
