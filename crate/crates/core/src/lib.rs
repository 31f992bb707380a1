//! Validated state machines for two structured-ideation protocols.
//!
//! * [`collider`] runs the five-step GHOSTY COLLIDER: fragment harvest, ghost
//!   extraction, collision matrix, vision crystallization and reality bridge.
//! * [`precog`] runs the five-step PRECOG PROTOCOL: signal map, convergence
//!   analysis, contrarian view, timing grid and action window.
//! * [`integration`] feeds PRECOG convergences into a collider run and maps the
//!   resulting visions back onto timing grids and action items.
//! * [`ledger`] is the append-only session store plus signal-history diffs,
//!   prediction tracking and rubric scoring.
//! * [`batch`] replays many collider runs and aggregates their statistics.
//!
//! The engine never writes prose. Every ghost, vision or signal is supplied by
//! the operator (or by an external generator and then accepted by the
//! operator); the engine only enforces gates and records the trace.

pub mod batch;
pub mod collider;
pub mod config;
pub mod fixture;
pub mod integration;
pub mod ledger;
pub mod precog;
mod text;

use serde::{Deserialize, Serialize};

pub use text::{overlap_ratio, tokens};

/// Wall-clock instant used for step timestamps and ledger envelopes.
pub type Timestamp = chrono::DateTime<chrono::Utc>;

/// Evidence confidence tag shared by PRECOG signals and imported fragments.
///
/// Ordered from weakest to strongest so that `min` yields the most
/// conservative tag of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Speculative,
    Reported,
    Verified,
}

/// Errors surfaced to callers carry a stable machine code and, when a single
/// input field is at fault, the path of that field.
pub trait ValidationError: std::error::Error {
    fn code(&self) -> &'static str;
    fn field_path(&self) -> Option<String> {
        None
    }
}

pub(crate) fn require_text(value: &str, field: &str) -> Result<(), String> {
    if value.trim().is_empty() {
        Err(field.to_string())
    } else {
        Ok(())
    }
}
