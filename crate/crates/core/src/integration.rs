//! Bidirectional bridge between the two protocols.
//!
//! PRECOG → GHOSTY: selected convergence points become collider fragments,
//! topped up with external-domain fragments.
//! GHOSTY → PRECOG: a bridged vision sets the readiness axis of a timing grid
//! and its reality bridge becomes action items.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collider::{ColliderSession, Fragment, RealityBridge, SourceKind, Vision};
use crate::config::{ReadinessRules, TimingRules};
use crate::precog::{
    evaluate_timing_grid_with, ActionCategory, ActionItem, Competitive, ExternalWindow,
    MarketPhase, Overall, PrecogSession, PrecogStatus, Readiness, TimingGrid, TimingJudgment,
};
use crate::{Confidence, ValidationError};

pub const MIN_SELECTED: usize = 2;
pub const MAX_SELECTED: usize = 3;
pub const MIN_EXTERNAL: usize = 1;
pub const MAX_EXTERNAL: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("PRECOG session {0} is not finalized")]
    UnfinalizedSession(String),
    #[error("{field}: {count} selected, expected {min}..={max}")]
    SelectionOutOfBounds {
        field: &'static str,
        count: usize,
        min: usize,
        max: usize,
    },
    #[error("unknown convergence '{id}'")]
    UnknownConvergence { id: String, index: usize },
    #[error("convergence '{0}' selected twice")]
    DuplicateSelection(String),
    #[error("external fragment {index}: {message}")]
    InvalidExternal { index: usize, message: String },
    #[error("unknown vision '{0}'")]
    UnknownVision(String),
    #[error("vision {0} has no reality bridge")]
    UnbridgedVision(String),
    #[error("vision {0} already mapped")]
    AlreadyMapped(String),
    #[error("collider session {0} belongs to a different integration run")]
    ForeignSession(String),
}

impl ValidationError for IntegrationError {
    fn code(&self) -> &'static str {
        match self {
            Self::UnfinalizedSession(_) => "unfinalized_session",
            Self::SelectionOutOfBounds { .. } => "selection_out_of_bounds",
            Self::UnknownConvergence { .. } => "unknown_convergence",
            Self::DuplicateSelection(_) => "duplicate_selection",
            Self::InvalidExternal { .. } => "invalid_external",
            Self::UnknownVision(_) => "unknown_vision",
            Self::UnbridgedVision(_) => "unbridged_vision",
            Self::AlreadyMapped(_) => "already_mapped",
            Self::ForeignSession(_) => "foreign_session",
        }
    }

    fn field_path(&self) -> Option<String> {
        Some(match self {
            Self::SelectionOutOfBounds { field, .. } => field.to_string(),
            Self::UnknownConvergence { index, .. } => format!("selection[{index}]"),
            Self::DuplicateSelection(_) => "selection".into(),
            Self::InvalidExternal { index, .. } => format!("externals[{index}]"),
            Self::UnknownVision(_) | Self::UnbridgedVision(_) | Self::AlreadyMapped(_) => {
                "vision_id".into()
            }
            Self::UnfinalizedSession(_) | Self::ForeignSession(_) => return None,
        })
    }
}

/// Turns 2–3 convergence points of a finalized PRECOG session plus 1–2
/// external fragments into a collider fragment list.
///
/// Convergence fragments take the convergence id as fragment id, the PRECOG
/// theme key as domain tag and the weakest confidence of their signals.
/// External fragments are renumbered `x1`, `x2`.
pub fn convergences_to_fragments(
    precog: &PrecogSession,
    selection: &[String],
    externals: &[Fragment],
) -> Result<Vec<Fragment>, IntegrationError> {
    if precog.status != PrecogStatus::Completed {
        return Err(IntegrationError::UnfinalizedSession(precog.id.clone()));
    }
    if !(MIN_SELECTED..=MAX_SELECTED).contains(&selection.len()) {
        return Err(IntegrationError::SelectionOutOfBounds {
            field: "selection",
            count: selection.len(),
            min: MIN_SELECTED,
            max: MAX_SELECTED,
        });
    }
    if !(MIN_EXTERNAL..=MAX_EXTERNAL).contains(&externals.len()) {
        return Err(IntegrationError::SelectionOutOfBounds {
            field: "externals",
            count: externals.len(),
            min: MIN_EXTERNAL,
            max: MAX_EXTERNAL,
        });
    }
    let mut out = Vec::with_capacity(selection.len() + externals.len());
    for (index, id) in selection.iter().enumerate() {
        if selection[..index].contains(id) {
            return Err(IntegrationError::DuplicateSelection(id.clone()));
        }
        let c = precog
            .convergence(id)
            .ok_or_else(|| IntegrationError::UnknownConvergence {
                id: id.clone(),
                index,
            })?;
        let confidence = c
            .signal_keys
            .iter()
            .filter_map(|k| precog.signal(k).and_then(|s| s.confidence))
            .min();
        out.push(Fragment {
            id: c.id.clone(),
            text: format!("{} {}", c.hypothesis.trim(), c.causal_logic.trim()),
            domain_tag: precog.theme_key.clone(),
            source_kind: SourceKind::Observation,
            confidence,
        });
    }
    for (index, ext) in externals.iter().enumerate() {
        if ext.text.trim().is_empty() || ext.domain_tag.trim().is_empty() {
            return Err(IntegrationError::InvalidExternal {
                index,
                message: "text and domain_tag are required".into(),
            });
        }
        let mut f = ext.clone();
        f.id = format!("x{}", index + 1);
        out.push(f);
    }
    Ok(out)
}

/// Weakest tag of a chain under Verified > Reported > Speculative.
pub fn chain_confidence(tags: &[Confidence]) -> Option<Confidence> {
    tags.iter().copied().min()
}

pub fn vision_to_readiness(vision: &Vision, rules: &ReadinessRules) -> Readiness {
    let f = vision.ratings.feasibility;
    if f >= rules.ready_min_feasibility {
        Readiness::Ready
    } else if f >= rules.partial_min_feasibility {
        Readiness::PartiallyReady
    } else {
        Readiness::NotReady
    }
}

/// One Now item for the 24-hour first step plus one Kill item per kill
/// condition.
pub fn bridge_to_actions(vision: &Vision, bridge: &RealityBridge) -> Vec<ActionItem> {
    let mut items = Vec::with_capacity(1 + bridge.kill_conditions.len());
    items.push(ActionItem {
        category: ActionCategory::Now,
        action: bridge.first_step_24h.clone(),
        trigger: "immediate".into(),
        cost_estimate: bridge.mvv.clone(),
    });
    for condition in &bridge.kill_conditions {
        items.push(ActionItem {
            category: ActionCategory::Kill,
            action: format!("stop investing in '{}'", vision.name),
            trigger: condition.clone(),
            cost_estimate: "no further spend; write off the MVV".into(),
        });
    }
    items
}

/// Timing axes the operator picks by hand. Readiness comes from the vision
/// unless the operator overrides it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualAxes {
    pub market_phase: MarketPhase,
    pub competitive: Competitive,
    pub external_window: ExternalWindow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readiness_override: Option<Readiness>,
    #[serde(default)]
    pub annotation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisionMapping {
    pub vision_id: String,
    pub label: String,
    pub grid: TimingGrid,
    pub judgment: TimingJudgment,
    pub actions: Vec<ActionItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationRun {
    pub id: String,
    pub precog_session_id: String,
    pub theme_key: String,
    pub selected_convergences: Vec<String>,
    pub external_fragments: Vec<Fragment>,
    pub collider_session_id: String,
    pub mappings: Vec<VisionMapping>,
}

impl IntegrationRun {
    pub fn start(
        id: impl Into<String>,
        precog: &PrecogSession,
        selection: Vec<String>,
        externals: Vec<Fragment>,
        collider_session_id: impl Into<String>,
    ) -> Result<(Self, Vec<Fragment>), IntegrationError> {
        let fragments = convergences_to_fragments(precog, &selection, &externals)?;
        let external_fragments = fragments[selection.len()..].to_vec();
        Ok((
            Self {
                id: id.into(),
                precog_session_id: precog.id.clone(),
                theme_key: precog.theme_key.clone(),
                selected_convergences: selection,
                external_fragments,
                collider_session_id: collider_session_id.into(),
                mappings: Vec::new(),
            },
            fragments,
        ))
    }

    /// Maps one bridged vision onto a timing grid and action items.
    ///
    /// The first-step item is filed under the category matching the grid's
    /// overall judgment, so a Now item exists exactly when the judgment is Go.
    pub fn map_vision(
        &mut self,
        collider: &ColliderSession,
        vision_id: &str,
        axes: ManualAxes,
        timing: &TimingRules,
        readiness: &ReadinessRules,
    ) -> Result<&VisionMapping, IntegrationError> {
        if collider.id != self.collider_session_id {
            return Err(IntegrationError::ForeignSession(collider.id.clone()));
        }
        if self.mappings.iter().any(|m| m.vision_id == vision_id) {
            return Err(IntegrationError::AlreadyMapped(vision_id.to_string()));
        }
        let entry = collider
            .vision(vision_id)
            .ok_or_else(|| IntegrationError::UnknownVision(vision_id.to_string()))?;
        let bridge = collider
            .bridge(vision_id)
            .ok_or_else(|| IntegrationError::UnbridgedVision(vision_id.to_string()))?;
        let grid = TimingGrid {
            market_phase: axes.market_phase,
            competitive: axes.competitive,
            readiness: axes
                .readiness_override
                .unwrap_or_else(|| vision_to_readiness(&entry.vision, readiness)),
            external_window: axes.external_window,
            annotation: axes.annotation,
        };
        let judgment = evaluate_timing_grid_with(&grid, timing);
        let mut actions = bridge_to_actions(&entry.vision, bridge);
        actions[0].category = match judgment.overall {
            Overall::Go => ActionCategory::Now,
            Overall::Soon => ActionCategory::Soon,
            Overall::Watch => ActionCategory::Watch,
        };
        self.mappings.push(VisionMapping {
            vision_id: vision_id.to_string(),
            label: entry.vision.name.clone(),
            grid,
            judgment,
            actions,
        });
        Ok(self.mappings.last().expect("just pushed"))
    }
}
