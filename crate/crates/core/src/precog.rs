//! PRECOG PROTOCOL session: signal map → convergence analysis → contrarian
//! view → timing grid → action window.
//!
//! Each step operation accepts being called either in its own phase or right
//! after the previous phase has met its exit condition, in which case the
//! session advances first. Phases are never skipped.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::TimingRules;
use crate::{require_text, Confidence, Timestamp, ValidationError};

pub const MIN_SIGNALS: usize = 3;
pub const MAX_SIGNALS: usize = 8;
/// Contrarian scenarios required once a timing grid is over-determined.
pub const ESCALATED_MIN_SCENARIOS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Weak,
    Emerging,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Decelerating,
    Stable,
    Accelerating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    Numeric,
    Behavioral,
    Narrative,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub claim: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    /// Operator-assigned key used to match the same signal across sessions.
    pub key: String,
    pub description: String,
    pub evidence: Vec<Evidence>,
    pub strength: Strength,
    pub direction: Direction,
    /// Mandatory; `None` is rejected on entry.
    pub confidence: Option<Confidence>,
    pub source_kind: SignalSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    High,
    Medium,
    Low,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    /// Assigned by the session (`c1`, `c2`, ...).
    #[serde(default)]
    pub id: String,
    pub signal_keys: Vec<String>,
    pub hypothesis: String,
    pub causal_logic: String,
    pub confidence: Level,
    pub confidence_rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    #[serde(flatten)]
    pub convergence: ConvergencePoint,
    /// Set when the hypothesis does not read as exactly one sentence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_advisory: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrarianScenario {
    pub description: String,
    pub historical_analogy: String,
    pub preconditions: Vec<String>,
    pub collapse_trigger: String,
    pub probability_low: f64,
    pub probability_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrarianView {
    pub overestimation_reason: String,
    pub scenarios: Vec<ContrarianScenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketPhase {
    PreEmergence,
    Emergence,
    Acceleration,
    Peak,
    Correction,
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Competitive {
    FirstMover,
    FastFollower,
    Fortifier,
    TooLate,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readiness {
    NotReady,
    PartiallyReady,
    Ready,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalWindow {
    Open,
    Opening,
    Closed,
}

impl MarketPhase {
    pub const ALL: [Self; 6] = [
        Self::PreEmergence,
        Self::Emergence,
        Self::Acceleration,
        Self::Peak,
        Self::Correction,
        Self::Plateau,
    ];
}

impl Competitive {
    pub const ALL: [Self; 5] = [
        Self::FirstMover,
        Self::FastFollower,
        Self::Fortifier,
        Self::TooLate,
        Self::Undefined,
    ];
}

impl Readiness {
    pub const ALL: [Self; 3] = [Self::NotReady, Self::PartiallyReady, Self::Ready];
}

impl ExternalWindow {
    pub const ALL: [Self; 3] = [Self::Open, Self::Opening, Self::Closed];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingGrid {
    pub market_phase: MarketPhase,
    pub competitive: Competitive,
    pub readiness: Readiness,
    pub external_window: ExternalWindow,
    #[serde(default)]
    pub annotation: String,
}

impl TimingGrid {
    pub fn new(
        market_phase: MarketPhase,
        competitive: Competitive,
        readiness: Readiness,
        external_window: ExternalWindow,
    ) -> Self {
        Self {
            market_phase,
            competitive,
            readiness,
            external_window,
            annotation: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Go,
    Soon,
    Watch,
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Go => "Go",
            Self::Soon => "Soon",
            Self::Watch => "Watch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingJudgment {
    pub overall: Overall,
    pub polarity_sum: i32,
    pub escalated_contrarian_required: bool,
}

impl fmt::Display for TimingJudgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (sum={}, escalation: {})",
            self.overall,
            self.polarity_sum,
            if self.escalated_contrarian_required {
                "required"
            } else {
                "none"
            }
        )
    }
}

/// Per-axis polarities of a grid, in axis order market/competitive/readiness/external.
pub fn axis_polarities(grid: &TimingGrid, rules: &TimingRules) -> [i32; 4] {
    [
        rules.market_polarity(grid.market_phase),
        rules.competitive_polarity(grid.competitive),
        rules.readiness_polarity(grid.readiness),
        rules.external_polarity(grid.external_window),
    ]
}

/// Synthesizes the four axes into one judgment. Four axes aligned the same
/// non-neutral way mark the grid as over-determined.
pub fn evaluate_timing_grid_with(grid: &TimingGrid, rules: &TimingRules) -> TimingJudgment {
    let p = axis_polarities(grid, rules);
    let sum: i32 = p.iter().sum();
    let overall = if sum >= rules.go_min {
        Overall::Go
    } else if sum >= rules.soon_min {
        Overall::Soon
    } else {
        Overall::Watch
    };
    let aligned = p[0] != 0 && p.iter().all(|&x| x == p[0]);
    TimingJudgment {
        overall,
        polarity_sum: sum,
        escalated_contrarian_required: aligned,
    }
}

pub fn evaluate_timing_grid(grid: &TimingGrid) -> TimingJudgment {
    evaluate_timing_grid_with(grid, &TimingRules::default())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub label: String,
    pub grid: TimingGrid,
    pub judgment: TimingJudgment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    Now,
    Soon,
    Watch,
    Kill,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionItem {
    pub category: ActionCategory,
    pub action: String,
    pub trigger: String,
    pub cost_estimate: String,
}

impl ActionItem {
    pub fn validate(&self) -> Result<()> {
        if self.action.trim().is_empty() {
            return Err(PrecogError::MissingAction);
        }
        if self.trigger.trim().is_empty() {
            return Err(PrecogError::MissingTrigger);
        }
        if self.cost_estimate.trim().is_empty() {
            return Err(PrecogError::MissingCost);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecogStatus {
    Mapping,
    Converging,
    Contrarian,
    Timing,
    Acting,
    Completed,
}

impl PrecogStatus {
    pub const LINEAR: [PrecogStatus; 6] = [
        Self::Mapping,
        Self::Converging,
        Self::Contrarian,
        Self::Timing,
        Self::Acting,
        Self::Completed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mapping => "mapping",
            Self::Converging => "converging",
            Self::Contrarian => "contrarian",
            Self::Timing => "timing",
            Self::Acting => "acting",
            Self::Completed => "completed",
        }
    }
}

impl fmt::Display for PrecogStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecogError {
    #[error("operation requires status {expected}, session is {actual}")]
    WrongPhase {
        expected: &'static str,
        actual: PrecogStatus,
    },
    #[error("signal map already holds {max} signals", max = MAX_SIGNALS)]
    TooManySignals,
    #[error("signal map needs at least {min} signals, has {count}", min = MIN_SIGNALS)]
    NotEnoughSignals { count: usize },
    #[error("signal '{0}' has no confidence tag")]
    MissingConfidence(String),
    #[error("signal '{0}' has no evidence")]
    EmptyEvidence(String),
    #[error("duplicate signal key '{0}'")]
    DuplicateSignal(String),
    #[error("{field} must not be empty")]
    EmptyField { field: String },
    #[error("unknown signal '{key}'")]
    UnknownSignal { key: String, index: usize },
    #[error("a convergence needs at least two distinct signals, got {count}")]
    TooFewSignals { count: usize },
    #[error("convergence analysis has no convergence point yet")]
    NoConvergence,
    #[error("contrarian view needs an overestimation reason")]
    MissingOverestimationReason,
    #[error("contrarian view needs at least one scenario")]
    EmptyScenarios,
    #[error("scenario {index}: {problem}")]
    BadProbability {
        index: usize,
        field: &'static str,
        problem: String,
    },
    #[error("scenario {index} needs a historical analogy")]
    MissingAnalogy { index: usize },
    #[error("scenario {index} needs at least one precondition")]
    EmptyPreconditions { index: usize },
    #[error("scenario {index} needs a collapse trigger")]
    MissingCollapseTrigger { index: usize },
    #[error("no contrarian view recorded")]
    NoContrarian,
    #[error("no timing grid evaluated")]
    NoGridEvaluation,
    #[error("action needs a description")]
    MissingAction,
    #[error("action needs an execution trigger")]
    MissingTrigger,
    #[error("action needs a cost estimate")]
    MissingCost,
    #[error("session incomplete: {}", missing.join("; "))]
    IncompleteSession { missing: Vec<String> },
}

impl ValidationError for PrecogError {
    fn code(&self) -> &'static str {
        match self {
            Self::WrongPhase { .. } => "wrong_phase",
            Self::TooManySignals => "too_many_signals",
            Self::NotEnoughSignals { .. } => "not_enough_signals",
            Self::MissingConfidence(_) => "missing_confidence",
            Self::EmptyEvidence(_) => "empty_evidence",
            Self::DuplicateSignal(_) => "duplicate_signal",
            Self::EmptyField { .. } => "empty_field",
            Self::UnknownSignal { .. } => "unknown_signal",
            Self::TooFewSignals { .. } => "too_few_signals",
            Self::NoConvergence => "no_convergence",
            Self::MissingOverestimationReason => "missing_overestimation_reason",
            Self::EmptyScenarios => "empty_scenarios",
            Self::BadProbability { .. } => "bad_probability",
            Self::MissingAnalogy { .. } => "missing_analogy",
            Self::EmptyPreconditions { .. } => "empty_preconditions",
            Self::MissingCollapseTrigger { .. } => "missing_collapse_trigger",
            Self::NoContrarian => "no_contrarian",
            Self::NoGridEvaluation => "no_grid_evaluation",
            Self::MissingAction => "missing_action",
            Self::MissingTrigger => "missing_trigger",
            Self::MissingCost => "missing_cost",
            Self::IncompleteSession { .. } => "incomplete_session",
        }
    }

    fn field_path(&self) -> Option<String> {
        Some(match self {
            Self::MissingConfidence(_) => "confidence".into(),
            Self::EmptyEvidence(_) => "evidence".into(),
            Self::DuplicateSignal(_) => "key".into(),
            Self::EmptyField { field } => field.clone(),
            Self::UnknownSignal { index, .. } => format!("signal_keys[{index}]"),
            Self::TooFewSignals { .. } => "signal_keys".into(),
            Self::MissingOverestimationReason => "overestimation_reason".into(),
            Self::EmptyScenarios => "scenarios".into(),
            Self::BadProbability { index, field, .. } => format!("scenarios[{index}].{field}"),
            Self::MissingAnalogy { index } => format!("scenarios[{index}].historical_analogy"),
            Self::EmptyPreconditions { index } => format!("scenarios[{index}].preconditions"),
            Self::MissingCollapseTrigger { index } => {
                format!("scenarios[{index}].collapse_trigger")
            }
            Self::MissingAction => "action".into(),
            Self::MissingTrigger => "trigger".into(),
            Self::MissingCost => "cost_estimate".into(),
            _ => return None,
        })
    }
}

type Result<T> = std::result::Result<T, PrecogError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecogSession {
    pub id: String,
    pub theme_key: String,
    pub horizon: String,
    pub status: PrecogStatus,
    pub signals: Vec<Signal>,
    pub convergences: Vec<ConvergenceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrarian: Option<ContrarianView>,
    pub grid_evaluations: Vec<GridEvaluation>,
    pub actions: Vec<ActionItem>,
    pub step_timestamps: BTreeMap<String, Timestamp>,
}

/// Heuristic: a one-sentence hypothesis has exactly one terminal mark and it
/// sits at the end.
pub fn one_sentence_advisory(hypothesis: &str) -> Option<String> {
    let t = hypothesis.trim().trim_end_matches(['"', '\'', '”', '’']);
    let marks = t.chars().filter(|c| matches!(c, '.' | '!' | '?')).count();
    let ends = t.ends_with(['.', '!', '?']);
    if marks == 1 && ends {
        None
    } else {
        Some(format!(
            "hypothesis should be one sentence (found {marks} terminal marks)"
        ))
    }
}

fn validate_signal(signal: &Signal) -> Result<()> {
    require_text(&signal.key, "key").map_err(|field| PrecogError::EmptyField { field })?;
    require_text(&signal.description, "description")
        .map_err(|field| PrecogError::EmptyField { field })?;
    if signal.confidence.is_none() {
        return Err(PrecogError::MissingConfidence(signal.key.clone()));
    }
    if signal.evidence.is_empty() {
        return Err(PrecogError::EmptyEvidence(signal.key.clone()));
    }
    for (i, e) in signal.evidence.iter().enumerate() {
        require_text(&e.claim, &format!("evidence[{i}].claim"))
            .and_then(|_| require_text(&e.source, &format!("evidence[{i}].source")))
            .map_err(|field| PrecogError::EmptyField { field })?;
    }
    Ok(())
}

pub fn validate_contrarian(view: &ContrarianView) -> Result<()> {
    if view.overestimation_reason.trim().is_empty() {
        return Err(PrecogError::MissingOverestimationReason);
    }
    if view.scenarios.is_empty() {
        return Err(PrecogError::EmptyScenarios);
    }
    for (index, s) in view.scenarios.iter().enumerate() {
        require_text(&s.description, &format!("scenarios[{index}].description"))
            .map_err(|field| PrecogError::EmptyField { field })?;
        if s.historical_analogy.trim().is_empty() {
            return Err(PrecogError::MissingAnalogy { index });
        }
        if s.preconditions.iter().all(|p| p.trim().is_empty()) {
            return Err(PrecogError::EmptyPreconditions { index });
        }
        if s.collapse_trigger.trim().is_empty() {
            return Err(PrecogError::MissingCollapseTrigger { index });
        }
        for (field, p) in [
            ("probability_low", s.probability_low),
            ("probability_high", s.probability_high),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(PrecogError::BadProbability {
                    index,
                    field,
                    problem: format!("{field}={p} outside [0, 1]"),
                });
            }
        }
        if s.probability_low > s.probability_high {
            return Err(PrecogError::BadProbability {
                index,
                field: "probability_low",
                problem: format!(
                    "low {} exceeds high {}",
                    s.probability_low, s.probability_high
                ),
            });
        }
    }
    Ok(())
}

impl PrecogSession {
    pub fn new(
        id: impl Into<String>,
        theme_key: impl Into<String>,
        horizon: impl Into<String>,
        now: Timestamp,
    ) -> Self {
        let mut s = Self {
            id: id.into(),
            theme_key: theme_key.into(),
            horizon: horizon.into(),
            status: PrecogStatus::Mapping,
            signals: Vec::new(),
            convergences: Vec::new(),
            contrarian: None,
            grid_evaluations: Vec::new(),
            actions: Vec::new(),
            step_timestamps: BTreeMap::new(),
        };
        s.step_timestamps
            .insert(PrecogStatus::Mapping.as_str().to_string(), now);
        s
    }

    pub fn signal(&self, key: &str) -> Option<&Signal> {
        self.signals.iter().find(|s| s.key == key)
    }

    pub fn convergence(&self, id: &str) -> Option<&ConvergencePoint> {
        self.convergences
            .iter()
            .map(|c| &c.convergence)
            .find(|c| c.id == id)
    }

    pub fn escalation_required(&self) -> bool {
        self.grid_evaluations
            .iter()
            .any(|g| g.judgment.escalated_contrarian_required)
    }

    fn enter(&mut self, status: PrecogStatus, now: Timestamp) {
        self.status = status;
        self.step_timestamps.insert(status.as_str().to_string(), now);
    }

    /// Exit condition of the current phase, if any is unmet.
    fn exit_blocker(&self) -> Option<PrecogError> {
        match self.status {
            PrecogStatus::Mapping if self.signals.len() < MIN_SIGNALS => {
                Some(PrecogError::NotEnoughSignals {
                    count: self.signals.len(),
                })
            }
            PrecogStatus::Converging if self.convergences.is_empty() => {
                Some(PrecogError::NoConvergence)
            }
            PrecogStatus::Contrarian if self.contrarian.is_none() => Some(PrecogError::NoContrarian),
            PrecogStatus::Timing if self.grid_evaluations.is_empty() => {
                Some(PrecogError::NoGridEvaluation)
            }
            _ => None,
        }
    }

    /// Ensures the session is in `phase`, advancing one step from the
    /// immediately preceding phase when its exit condition holds.
    fn reach(&mut self, phase: PrecogStatus, now: Timestamp) -> Result<()> {
        if self.status == phase {
            return Ok(());
        }
        let idx = PrecogStatus::LINEAR.iter().position(|s| *s == phase);
        let cur = PrecogStatus::LINEAR.iter().position(|s| *s == self.status);
        match (idx, cur) {
            (Some(i), Some(c)) if i == c + 1 => match self.exit_blocker() {
                Some(err) => Err(err),
                None => {
                    self.enter(phase, now);
                    Ok(())
                }
            },
            _ => Err(PrecogError::WrongPhase {
                expected: phase.as_str(),
                actual: self.status,
            }),
        }
    }

    pub fn add_signal(&mut self, signal: Signal, _now: Timestamp) -> Result<()> {
        if self.status != PrecogStatus::Mapping {
            return Err(PrecogError::WrongPhase {
                expected: "mapping",
                actual: self.status,
            });
        }
        if self.signals.len() >= MAX_SIGNALS {
            return Err(PrecogError::TooManySignals);
        }
        validate_signal(&signal)?;
        if self.signal(&signal.key).is_some() {
            return Err(PrecogError::DuplicateSignal(signal.key));
        }
        self.signals.push(signal);
        Ok(())
    }

    /// Returns the assigned convergence id.
    pub fn add_convergence(&mut self, mut c: ConvergencePoint, now: Timestamp) -> Result<String> {
        let mut distinct: Vec<&str> = c.signal_keys.iter().map(String::as_str).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(PrecogError::TooFewSignals {
                count: distinct.len(),
            });
        }
        for (index, key) in c.signal_keys.iter().enumerate() {
            if self.signal(key).is_none() {
                return Err(PrecogError::UnknownSignal {
                    key: key.clone(),
                    index,
                });
            }
        }
        for (field, v) in [
            ("hypothesis", &c.hypothesis),
            ("causal_logic", &c.causal_logic),
            ("confidence_rationale", &c.confidence_rationale),
        ] {
            require_text(v, field).map_err(|field| PrecogError::EmptyField { field })?;
        }
        self.reach(PrecogStatus::Converging, now)?;
        c.id = format!("c{}", self.convergences.len() + 1);
        let id = c.id.clone();
        let hypothesis_advisory = one_sentence_advisory(&c.hypothesis);
        self.convergences.push(ConvergenceEntry {
            convergence: c,
            hypothesis_advisory,
        });
        Ok(id)
    }

    /// Records the contrarian view. Later phases may replace it, for example
    /// to add scenarios after an escalation.
    pub fn set_contrarian(&mut self, view: ContrarianView, now: Timestamp) -> Result<()> {
        validate_contrarian(&view)?;
        if !matches!(self.status, PrecogStatus::Timing | PrecogStatus::Acting) {
            self.reach(PrecogStatus::Contrarian, now)?;
        }
        self.contrarian = Some(view);
        Ok(())
    }

    pub fn add_grid_evaluation(
        &mut self,
        label: impl Into<String>,
        grid: TimingGrid,
        rules: &TimingRules,
        now: Timestamp,
    ) -> Result<TimingJudgment> {
        let label = label.into();
        require_text(&label, "label").map_err(|field| PrecogError::EmptyField { field })?;
        self.reach(PrecogStatus::Timing, now)?;
        let judgment = evaluate_timing_grid_with(&grid, rules);
        self.grid_evaluations.push(GridEvaluation {
            label,
            grid,
            judgment,
        });
        Ok(judgment)
    }

    pub fn add_action(&mut self, item: ActionItem, now: Timestamp) -> Result<()> {
        item.validate()?;
        self.reach(PrecogStatus::Acting, now)?;
        self.actions.push(item);
        Ok(())
    }

    pub fn actions_in(&self, category: ActionCategory) -> impl Iterator<Item = &ActionItem> {
        self.actions.iter().filter(move |a| a.category == category)
    }

    /// Lists every unmet completion requirement.
    pub fn completion_gaps(&self) -> Vec<String> {
        let mut missing = Vec::new();
        let n = self.signals.len();
        if !(MIN_SIGNALS..=MAX_SIGNALS).contains(&n) {
            missing.push(format!("signal count {n} outside {MIN_SIGNALS}..={MAX_SIGNALS}"));
        }
        if self.convergences.is_empty() {
            missing.push("no convergence point".into());
        }
        match &self.contrarian {
            None => missing.push("no contrarian view".into()),
            Some(view) if self.escalation_required() && view.scenarios.len() < ESCALATED_MIN_SCENARIOS => {
                missing.push(format!(
                    "timing grid is over-determined: escalated contrarian view needs >= {ESCALATED_MIN_SCENARIOS} scenarios, has {}",
                    view.scenarios.len()
                ));
            }
            Some(_) => {}
        }
        if self.grid_evaluations.is_empty() {
            missing.push("no timing grid evaluation".into());
        }
        if self.actions.is_empty() {
            missing.push("no action item".into());
        }
        missing
    }

    pub fn finalize(&mut self, now: Timestamp) -> Result<()> {
        if self.status == PrecogStatus::Completed {
            return Err(PrecogError::WrongPhase {
                expected: "acting",
                actual: self.status,
            });
        }
        let missing = self.completion_gaps();
        if !missing.is_empty() {
            return Err(PrecogError::IncompleteSession { missing });
        }
        self.enter(PrecogStatus::Completed, now);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t0() -> Timestamp {
        chrono::Utc.with_ymd_and_hms(2026, 2, 1, 0, 0, 0).unwrap()
    }

    pub(crate) fn signal(key: &str, strength: Strength) -> Signal {
        Signal {
            key: key.into(),
            description: format!("signal {key}"),
            evidence: vec![Evidence {
                claim: "observed".into(),
                source: "annual report".into(),
            }],
            strength,
            direction: Direction::Accelerating,
            confidence: Some(Confidence::Verified),
            source_kind: SignalSource::Numeric,
        }
    }

    fn convergence(keys: &[&str]) -> ConvergencePoint {
        ConvergencePoint {
            id: String::new(),
            signal_keys: keys.iter().map(|k| k.to_string()).collect(),
            hypothesis: "Revenue structure transformation in progress.".into(),
            causal_logic: "growing and shrinking at once".into(),
            confidence: Level::High,
            confidence_rationale: "both signals verified".into(),
        }
    }

    fn scenario(low: f64, high: f64) -> ContrarianScenario {
        ContrarianScenario {
            description: "Agent-caused incident triggers regulatory freeze".into(),
            historical_analogy: "2010 flash crash circuit breakers".into(),
            preconditions: vec!["no major incident".into()],
            collapse_trigger: "a major incident occurs".into(),
            probability_low: low,
            probability_high: high,
        }
    }

    fn view(n: usize) -> ContrarianView {
        ContrarianView {
            overestimation_reason: "consensus formed on demos, not deployments".into(),
            scenarios: (0..n).map(|_| scenario(0.25, 0.35)).collect(),
        }
    }

    fn action(cat: ActionCategory) -> ActionItem {
        ActionItem {
            category: cat,
            action: "prototype".into(),
            trigger: "immediate".into(),
            cost_estimate: "2 engineer-weeks".into(),
        }
    }

    fn mapped(n: usize) -> PrecogSession {
        let mut s = PrecogSession::new("precog-0001", "ai-agents", "2026-2028", t0());
        for i in 1..=n {
            s.add_signal(signal(&format!("s{i}"), Strength::Strong), t0()).unwrap();
        }
        s
    }

    #[test]
    fn signal_bounds_and_validation() {
        let mut s = mapped(8);
        assert_eq!(
            s.add_signal(signal("s9", Strength::Weak), t0()),
            Err(PrecogError::TooManySignals)
        );
        let mut s = mapped(1);
        let mut empty = signal("e", Strength::Weak);
        empty.evidence.clear();
        assert_eq!(s.add_signal(empty, t0()), Err(PrecogError::EmptyEvidence("e".into())));
        let mut untagged = signal("u", Strength::Weak);
        untagged.confidence = None;
        let err = s.add_signal(untagged, t0()).unwrap_err();
        assert_eq!(err.field_path().as_deref(), Some("confidence"));
        assert!(matches!(
            s.add_signal(signal("s1", Strength::Weak), t0()),
            Err(PrecogError::DuplicateSignal(_))
        ));
    }

    #[test]
    fn convergence_rules() {
        let mut s = mapped(2);
        assert!(matches!(
            s.add_convergence(convergence(&["s1", "s2"]), t0()),
            Err(PrecogError::NotEnoughSignals { count: 2 })
        ));
        let mut s = mapped(6);
        assert_eq!(
            s.add_convergence(convergence(&["s1"]), t0()),
            Err(PrecogError::TooFewSignals { count: 1 })
        );
        assert_eq!(
            s.add_convergence(convergence(&["s1", "s1"]), t0()),
            Err(PrecogError::TooFewSignals { count: 1 })
        );
        let err = s.add_convergence(convergence(&["s1", "nope"]), t0()).unwrap_err();
        assert_eq!(err.field_path().as_deref(), Some("signal_keys[1]"));
        assert_eq!(s.status, PrecogStatus::Mapping);
        let id = s.add_convergence(convergence(&["s1", "s3"]), t0()).unwrap();
        assert_eq!(id, "c1");
        assert_eq!(s.status, PrecogStatus::Converging);
        assert!(s.convergences[0].hypothesis_advisory.is_none());
        // no more signals once converging
        assert!(matches!(
            s.add_signal(signal("s7", Strength::Weak), t0()),
            Err(PrecogError::WrongPhase { .. })
        ));
    }

    #[test]
    fn one_sentence_heuristic() {
        assert!(one_sentence_advisory("Platform hegemony is contestable.").is_none());
        assert!(one_sentence_advisory("Social license at risk.\u{201d}").is_none());
        assert!(one_sentence_advisory("Two things. Both true.").is_some());
        assert!(one_sentence_advisory("no punctuation").is_some());
    }

    #[test]
    fn contrarian_validation() {
        let mut s = mapped(3);
        s.add_convergence(convergence(&["s1", "s2"]), t0()).unwrap();
        let mut bad = view(1);
        bad.scenarios[0] = scenario(0.5, 0.4);
        let err = s.set_contrarian(bad, t0()).unwrap_err();
        assert_eq!(err.code(), "bad_probability");
        assert_eq!(err.field_path().as_deref(), Some("scenarios[0].probability_low"));
        let mut out = view(2);
        out.scenarios[1] = scenario(0.2, 1.2);
        assert_eq!(
            s.set_contrarian(out, t0()).unwrap_err().field_path().as_deref(),
            Some("scenarios[1].probability_high")
        );
        assert_eq!(s.set_contrarian(view(0), t0()), Err(PrecogError::EmptyScenarios));
        let mut no_reason = view(1);
        no_reason.overestimation_reason.clear();
        assert_eq!(
            s.set_contrarian(no_reason, t0()),
            Err(PrecogError::MissingOverestimationReason)
        );
        let mut no_analogy = view(1);
        no_analogy.scenarios[0].historical_analogy.clear();
        assert_eq!(
            s.set_contrarian(no_analogy, t0()),
            Err(PrecogError::MissingAnalogy { index: 0 })
        );
        let view = ContrarianView {
            overestimation_reason: "demos outpace deployments".into(),
            scenarios: vec![scenario(0.25, 0.35), scenario(0.30, 0.40), scenario(0.50, 0.60)],
        };
        s.set_contrarian(view, t0()).unwrap();
        assert_eq!(s.status, PrecogStatus::Contrarian);
    }

    #[test]
    fn table_two_rows() {
        let rows = [
            (
                TimingGrid::new(MarketPhase::Acceleration, Competitive::FastFollower, Readiness::Ready, ExternalWindow::Open),
                Overall::Go,
                4,
                true,
            ),
            (
                TimingGrid::new(MarketPhase::Emergence, Competitive::FirstMover, Readiness::PartiallyReady, ExternalWindow::Opening),
                Overall::Soon,
                2,
                false,
            ),
            (
                TimingGrid::new(MarketPhase::PreEmergence, Competitive::Undefined, Readiness::NotReady, ExternalWindow::Closed),
                Overall::Watch,
                -3,
                false,
            ),
        ];
        for (grid, overall, sum, esc) in rows {
            let j = evaluate_timing_grid(&grid);
            assert_eq!((j.overall, j.polarity_sum, j.escalated_contrarian_required), (overall, sum, esc));
        }
    }

    #[test]
    fn judgment_display() {
        let j = evaluate_timing_grid(&TimingGrid::new(
            MarketPhase::Acceleration,
            Competitive::FastFollower,
            Readiness::Ready,
            ExternalWindow::Open,
        ));
        assert_eq!(j.to_string(), "Go (sum=4, escalation: required)");
    }

    fn through_timing(scenarios: usize, grid: TimingGrid) -> PrecogSession {
        let mut s = mapped(3);
        s.add_convergence(convergence(&["s1", "s2"]), t0()).unwrap();
        s.set_contrarian(view(scenarios), t0()).unwrap();
        s.add_grid_evaluation("market", grid, &TimingRules::default(), t0()).unwrap();
        s
    }

    fn all_positive() -> TimingGrid {
        TimingGrid::new(MarketPhase::Acceleration, Competitive::FastFollower, Readiness::Ready, ExternalWindow::Open)
    }

    #[test]
    fn action_validation() {
        let mut s = through_timing(1, TimingGrid::new(MarketPhase::Peak, Competitive::Fortifier, Readiness::Ready, ExternalWindow::Opening));
        let mut a = action(ActionCategory::Now);
        a.trigger.clear();
        assert_eq!(s.add_action(a, t0()), Err(PrecogError::MissingTrigger));
        let mut a = action(ActionCategory::Now);
        a.cost_estimate = " ".into();
        assert_eq!(s.add_action(a, t0()), Err(PrecogError::MissingCost));
        s.add_action(action(ActionCategory::Now), t0()).unwrap();
        s.add_action(action(ActionCategory::Kill), t0()).unwrap();
        assert_eq!(s.actions_in(ActionCategory::Kill).count(), 1);
        assert_eq!(s.status, PrecogStatus::Acting);
    }

    #[test]
    fn finalize_requires_escalated_contrarian() {
        let mut s = through_timing(1, all_positive());
        s.add_action(action(ActionCategory::Now), t0()).unwrap();
        let err = s.finalize(t0()).unwrap_err();
        match &err {
            PrecogError::IncompleteSession { missing } => {
                assert_eq!(missing.len(), 1);
                assert!(missing[0].contains("escalated"));
            }
            other => panic!("unexpected {other:?}"),
        }
        s.set_contrarian(view(2), t0()).unwrap();
        assert_eq!(s.status, PrecogStatus::Acting);
        s.finalize(t0()).unwrap();
        assert_eq!(s.status, PrecogStatus::Completed);
    }

    #[test]
    fn finalize_without_actions_fails() {
        let mut s = through_timing(3, all_positive());
        assert!(matches!(
            s.finalize(t0()),
            Err(PrecogError::IncompleteSession { missing }) if missing == ["no action item"]
        ));
    }

    #[test]
    fn phases_cannot_be_skipped() {
        let mut s = mapped(3);
        assert!(matches!(
            s.set_contrarian(view(1), t0()),
            Err(PrecogError::WrongPhase { expected: "contrarian", .. })
        ));
        assert!(matches!(
            s.add_action(action(ActionCategory::Now), t0()),
            Err(PrecogError::WrongPhase { .. })
        ));
        s.add_convergence(convergence(&["s1", "s2"]), t0()).unwrap();
        assert!(matches!(
            s.add_grid_evaluation("x", all_positive(), &TimingRules::default(), t0()),
            Err(PrecogError::WrongPhase { .. })
        ));
    }
}
