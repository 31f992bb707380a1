//! Append-only session ledger.
//!
//! One UTF-8 file, one JSON record per line. Every mutation of a session is
//! stored as a new record holding the full snapshot, so the latest record for
//! an entity id is its current state and replaying the file rebuilds every
//! view. Records are never rewritten.

mod history;
mod prediction;
mod rubric;

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::collider::ColliderSession;
use crate::integration::IntegrationRun;
use crate::precog::PrecogSession;
use crate::{Timestamp, ValidationError};

pub use history::{diff_signals, DeltaClass, SignalDelta};
pub use prediction::{
    accuracy_summary, evaluate_prediction, record_prediction, AccuracySummary, DateRange,
    Outcome, PredictionRecord,
};
pub use rubric::{default_labels, score_rubric, RubricError, RubricScore, RUBRIC_DIMENSIONS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Ghosty,
    Precog,
    Integration,
    /// Rubric scores, which may target any artifact.
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Collider(ColliderSession),
    Precog(PrecogSession),
    Integration(IntegrationRun),
    Prediction(PredictionRecord),
    Rubric(RubricScore),
}

impl Payload {
    /// Identity of the entity this snapshot belongs to.
    pub fn entity_id(&self) -> &str {
        match self {
            Self::Collider(s) => &s.id,
            Self::Precog(s) => &s.id,
            Self::Integration(r) => &r.id,
            Self::Prediction(p) => &p.id,
            Self::Rubric(r) => &r.id,
        }
    }

    pub fn protocol(&self) -> Protocol {
        match self {
            Self::Collider(_) => Protocol::Ghosty,
            Self::Precog(_) | Self::Prediction(_) => Protocol::Precog,
            Self::Integration(_) => Protocol::Integration,
            Self::Rubric(_) => Protocol::Evaluation,
        }
    }

    pub fn theme_key(&self) -> &str {
        match self {
            Self::Collider(s) => &s.theme,
            Self::Precog(s) => &s.theme_key,
            Self::Integration(r) => &r.theme_key,
            Self::Prediction(p) => &p.theme_key,
            Self::Rubric(r) => &r.target_ref,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub record_id: String,
    pub protocol: Protocol,
    pub theme_key: String,
    pub created_at: Timestamp,
    pub schema_version: u32,
    pub payload: Payload,
}

impl SessionRecord {
    pub fn new(record_id: impl Into<String>, payload: Payload, created_at: Timestamp) -> Self {
        Self {
            record_id: record_id.into(),
            protocol: payload.protocol(),
            theme_key: payload.theme_key().to_string(),
            created_at,
            schema_version: SCHEMA_VERSION,
            payload,
        }
    }

    /// Canonical serialized form of the payload alone.
    pub fn payload_json(&self) -> String {
        serde_json::to_string(&self.payload).expect("payload serializes")
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("storage failure: {0}")]
    StorageFailure(#[from] std::io::Error),
    #[error("corrupt record at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("record id '{0}' already exists")]
    DuplicateId(String),
    #[error("signal key '{0}' appears twice in one snapshot")]
    DuplicateKeyWithinSnapshot(String),
    #[error("unknown prediction '{0}'")]
    UnknownPrediction(String),
    #[error("prediction '{0}' already evaluated")]
    AlreadyEvaluated(String),
    #[error("{field}: {message}")]
    InvalidPrediction { field: &'static str, message: String },
}

impl LedgerError {
    pub fn is_storage(&self) -> bool {
        matches!(self, Self::StorageFailure(_) | Self::Corrupt { .. })
    }
}

impl ValidationError for LedgerError {
    fn code(&self) -> &'static str {
        match self {
            Self::StorageFailure(_) => "storage_failure",
            Self::Corrupt { .. } => "corrupt_store",
            Self::DuplicateId(_) => "duplicate_id",
            Self::DuplicateKeyWithinSnapshot(_) => "duplicate_key_within_snapshot",
            Self::UnknownPrediction(_) => "unknown_prediction",
            Self::AlreadyEvaluated(_) => "already_evaluated",
            Self::InvalidPrediction { .. } => "invalid_prediction",
        }
    }

    fn field_path(&self) -> Option<String> {
        match self {
            Self::DuplicateId(_) => Some("record_id".into()),
            Self::DuplicateKeyWithinSnapshot(_) => Some("signals.key".into()),
            Self::AlreadyEvaluated(_) => Some("outcome".into()),
            Self::InvalidPrediction { field, .. } => Some(field.to_string()),
            _ => None,
        }
    }
}

type Result<T> = std::result::Result<T, LedgerError>;

/// File-backed ledger. Holds an in-memory copy of every complete line read
/// so far; `refresh` picks up lines appended by other writers.
#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    records: Vec<SessionRecord>,
    lines: Vec<String>,
    /// Byte offset just past the last complete line consumed.
    consumed: u64,
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        OpenOptions::new().create(true).append(true).open(&path)?;
        let mut store = Self {
            path,
            records: Vec::new(),
            lines: Vec::new(),
            consumed: 0,
        };
        store.refresh()?;
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Reads complete lines appended since the last read. An unterminated
    /// trailing fragment is left unread (it is a partial write).
    pub fn refresh(&mut self) -> Result<()> {
        let mut file = File::open(&self.path)?;
        file.seek(SeekFrom::Start(self.consumed))?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)?;
        let mut start = 0usize;
        while let Some(pos) = buf[start..].iter().position(|b| *b == b'\n') {
            let raw = &buf[start..start + pos];
            let line_no = self.lines.len() + 1;
            let text = std::str::from_utf8(raw).map_err(|e| LedgerError::Corrupt {
                line: line_no,
                message: e.to_string(),
            })?;
            let record: SessionRecord =
                serde_json::from_str(text).map_err(|e| LedgerError::Corrupt {
                    line: line_no,
                    message: e.to_string(),
                })?;
            self.lines.push(text.to_string());
            self.records.push(record);
            start += pos + 1;
        }
        if start < buf.len() {
            warn!(
                path = %self.path.display(),
                bytes = buf.len() - start,
                "ignoring partial trailing record"
            );
        }
        self.consumed += start as u64;
        Ok(())
    }

    pub fn records(&self) -> &[SessionRecord] {
        &self.records
    }

    /// Raw line text of every record, in file order.
    pub fn raw_lines(&self) -> &[String] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, record_id: &str) -> Option<&SessionRecord> {
        self.records.iter().find(|r| r.record_id == record_id)
    }

    /// Most recent snapshot of an entity.
    pub fn latest(&self, entity_id: &str) -> Option<&SessionRecord> {
        self.records
            .iter()
            .rev()
            .find(|r| r.payload.entity_id() == entity_id)
    }

    /// Latest snapshot of every entity, ordered by first appearance.
    pub fn latest_snapshots(&self) -> Vec<&SessionRecord> {
        let mut order: Vec<&str> = Vec::new();
        for r in &self.records {
            let id = r.payload.entity_id();
            if !order.contains(&id) {
                order.push(id);
            }
        }
        order
            .into_iter()
            .filter_map(|id| self.latest(id))
            .collect()
    }

    /// Next id of the form `{prefix}-NNNN`, counting entities already stored
    /// under that prefix.
    pub fn next_entity_id(&self, prefix: &str) -> String {
        let lead = format!("{prefix}-");
        let n = self
            .latest_snapshots()
            .iter()
            .filter(|r| r.payload.entity_id().starts_with(&lead))
            .count();
        format!("{prefix}-{:04}", n + 1)
    }

    fn next_record_id(&self) -> String {
        format!("r{:06}", self.records.len() + 1)
    }

    /// Appends a snapshot under a freshly allocated record id.
    pub fn append_payload(&mut self, payload: Payload, now: Timestamp) -> Result<SessionRecord> {
        self.write_locked(|store| Ok(SessionRecord::new(store.next_record_id(), payload, now)))
    }

    /// Appends a fully formed record. Fails on a duplicate `record_id`.
    pub fn append(&mut self, record: SessionRecord) -> Result<String> {
        let rec = self.write_locked(|store| {
            if store.get(&record.record_id).is_some() {
                return Err(LedgerError::DuplicateId(record.record_id.clone()));
            }
            Ok(record)
        })?;
        Ok(rec.record_id)
    }

    /// Takes the file lock, catches up with other writers, trims a partial
    /// tail, then writes and syncs exactly one line.
    fn write_locked<F>(&mut self, build: F) -> Result<SessionRecord>
    where
        F: FnOnce(&Self) -> Result<SessionRecord>,
    {
        let mut file = OpenOptions::new().read(true).write(true).open(&self.path)?;
        file.lock()?;
        let result = (|| {
            self.refresh()?;
            let len = file.metadata()?.len();
            if len > self.consumed {
                warn!(
                    path = %self.path.display(),
                    bytes = len - self.consumed,
                    "truncating partial trailing record before append"
                );
                file.set_len(self.consumed)?;
            }
            let record = build(self)?;
            let line = serde_json::to_string(&record).map_err(|e| LedgerError::Corrupt {
                line: self.lines.len() + 1,
                message: e.to_string(),
            })?;
            file.seek(SeekFrom::Start(self.consumed))?;
            let mut bytes = line.clone().into_bytes();
            bytes.push(b'\n');
            file.write_all(&bytes)?;
            file.sync_data()?;
            self.consumed += bytes.len() as u64;
            self.lines.push(line);
            self.records.push(record.clone());
            Ok(record)
        })();
        let _ = file.unlock();
        result
    }
}
