//! Replay scripts for whole protocol runs.
//!
//! A script lists every operator input of a run in step order. Tests and the
//! acceptance suite feed the same script through the library, the CLI and
//! the HTTP API.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::batch::ScriptedScore;
use crate::collider::{Fragment, RealityBridge, Vision};
use crate::precog::{
    ActionItem, Competitive, ContrarianView, ConvergencePoint, ExternalWindow, MarketPhase,
    Overall, Readiness, Signal, TimingGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledGrid {
    pub label: String,
    #[serde(flatten)]
    pub grid: TimingGrid,
}

/// A complete PRECOG run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecogScript {
    #[serde(default)]
    pub description: String,
    pub theme: String,
    #[serde(default)]
    pub horizon: String,
    pub signals: Vec<Signal>,
    /// Ids are assigned in order: c1, c2, ...
    pub convergences: Vec<ConvergencePoint>,
    pub contrarian: ContrarianView,
    pub grid: LabeledGrid,
    pub actions: Vec<ActionItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalFragment {
    pub domain_tag: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedBridgedVision {
    /// Electric pair id.
    pub collision: String,
    #[serde(flatten)]
    pub vision: Vision,
    pub bridge: RealityBridge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedMapping {
    /// Vision name; ids follow crystallization order.
    pub vision: String,
    pub market_phase: MarketPhase,
    pub competitive: Competitive,
    pub external_window: ExternalWindow,
    #[serde(default)]
    pub readiness_override: Option<Readiness>,
    pub expected: Overall,
}

/// A PRECOG run whose convergences seed a collider run, with the resulting
/// visions mapped back onto timing grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationScript {
    #[serde(flatten)]
    pub precog: PrecogScript,
    pub selection: Vec<String>,
    pub externals: Vec<ExternalFragment>,
    /// Ghost text per fragment id (`c1`.., `x1`..).
    pub ghosts: BTreeMap<String, String>,
    pub scores: Vec<ScriptedScore>,
    pub visions: Vec<ScriptedBridgedVision>,
    pub mappings: Vec<ScriptedMapping>,
}

impl IntegrationScript {
    pub fn external_fragments(&self) -> Vec<Fragment> {
        self.externals
            .iter()
            .map(|e| Fragment::new(e.text.clone(), e.domain_tag.clone(), crate::collider::SourceKind::Observation))
            .collect()
    }
}
