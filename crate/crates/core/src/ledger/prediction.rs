//! Prediction feedback loop: record foresight calls, evaluate them once, and
//! keep per-theme Hit/Miss/Partial counts.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{LedgerError, Payload, Store};
use crate::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Hit,
    Miss,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(default)]
    pub id: String,
    pub theme_key: String,
    pub statement: String,
    pub horizon: DateRange,
    #[serde(default)]
    pub outcome: Option<Outcome>,
    /// Free prose; there is no scale for timing accuracy yet.
    #[serde(default)]
    pub timing_accuracy: Option<String>,
    #[serde(default)]
    pub contrarian_value: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub hit: usize,
    pub miss: usize,
    pub partial: usize,
    pub pending: usize,
}

fn validate(p: &PredictionRecord) -> Result<(), LedgerError> {
    if p.theme_key.trim().is_empty() {
        return Err(LedgerError::InvalidPrediction {
            field: "theme_key",
            message: "must not be empty".into(),
        });
    }
    if p.statement.trim().is_empty() {
        return Err(LedgerError::InvalidPrediction {
            field: "statement",
            message: "must not be empty".into(),
        });
    }
    if p.horizon.start > p.horizon.end {
        return Err(LedgerError::InvalidPrediction {
            field: "horizon",
            message: format!("start {} after end {}", p.horizon.start, p.horizon.end),
        });
    }
    if p.outcome.is_some() {
        return Err(LedgerError::InvalidPrediction {
            field: "outcome",
            message: "a new prediction cannot carry an outcome".into(),
        });
    }
    Ok(())
}

pub fn record_prediction(
    store: &mut Store,
    mut p: PredictionRecord,
    now: Timestamp,
) -> Result<String, LedgerError> {
    validate(&p)?;
    store.refresh()?;
    p.id = store.next_entity_id("prediction");
    let id = p.id.clone();
    store.append_payload(Payload::Prediction(p), now)?;
    Ok(id)
}

fn current(store: &Store, id: &str) -> Result<PredictionRecord, LedgerError> {
    match store.latest(id).map(|r| &r.payload) {
        Some(Payload::Prediction(p)) => Ok(p.clone()),
        _ => Err(LedgerError::UnknownPrediction(id.to_string())),
    }
}

/// Sets the outcome of a recorded prediction. Outcomes are immutable.
pub fn evaluate_prediction(
    store: &mut Store,
    id: &str,
    outcome: Outcome,
    timing_accuracy: Option<String>,
    contrarian_value: Option<String>,
    now: Timestamp,
) -> Result<PredictionRecord, LedgerError> {
    store.refresh()?;
    let mut p = current(store, id)?;
    if p.outcome.is_some() {
        return Err(LedgerError::AlreadyEvaluated(id.to_string()));
    }
    p.outcome = Some(outcome);
    p.timing_accuracy = timing_accuracy;
    p.contrarian_value = contrarian_value;
    store.append_payload(Payload::Prediction(p.clone()), now)?;
    Ok(p)
}

pub fn accuracy_summary(store: &Store, theme_key: &str) -> AccuracySummary {
    let mut summary = AccuracySummary::default();
    for rec in store.latest_snapshots() {
        if let Payload::Prediction(p) = &rec.payload {
            if p.theme_key != theme_key {
                continue;
            }
            match p.outcome {
                Some(Outcome::Hit) => summary.hit += 1,
                Some(Outcome::Miss) => summary.miss += 1,
                Some(Outcome::Partial) => summary.partial += 1,
                None => summary.pending += 1,
            }
        }
    }
    summary
}
