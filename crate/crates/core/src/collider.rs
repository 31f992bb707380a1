//! GHOSTY COLLIDER session: fragments → ghosts → collision matrix → visions →
//! reality bridges.
//!
//! Status moves strictly forward through
//! `Draft → Ghosting → Colliding → Crystallizing → Bridging → Completed`.
//! `AbortedPreflight` and `AbortedNoElectric` are terminal outcomes, not
//! errors: they are recorded like any other state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ColliderRules;
use crate::{overlap_ratio, require_text, Confidence, Timestamp, ValidationError};

pub const MIN_FRAGMENTS: usize = 3;
pub const MAX_FRAGMENTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    QuantitativeData,
    Observation,
    Aesthetic,
    GutFeeling,
    AbsentPattern,
    Experience,
    Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    /// Assigned by the session (`f1`, `f2`, ...) when left empty.
    #[serde(default)]
    pub id: String,
    pub text: String,
    pub domain_tag: String,
    pub source_kind: SourceKind,
    /// Present only on fragments imported from a PRECOG convergence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
}

impl Fragment {
    pub fn new(text: impl Into<String>, domain_tag: impl Into<String>, kind: SourceKind) -> Self {
        Self {
            id: String::new(),
            text: text.into(),
            domain_tag: domain_tag.into(),
            source_kind: kind,
            confidence: None,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        require_text(&self.text, &format!("{prefix}text"))
            .and_then(|_| require_text(&self.domain_tag, &format!("{prefix}domain_tag")))
            .map_err(|field| ColliderError::EmptyField { field })
    }

    fn normalized_tag(&self) -> String {
        self.domain_tag.trim().to_lowercase()
    }
}

/// Operator-asserted quality checklist for a ghost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GhostChecklist {
    pub uses_verbs: bool,
    pub includes_emotion: bool,
    pub cross_domain_comprehensible: bool,
    pub reversibility_pass: bool,
}

impl GhostChecklist {
    pub const fn all() -> Self {
        Self {
            uses_verbs: true,
            includes_emotion: true,
            cross_domain_comprehensible: true,
            reversibility_pass: true,
        }
    }

    fn first_unmet(&self) -> Option<&'static str> {
        [
            (self.uses_verbs, "uses_verbs"),
            (self.includes_emotion, "includes_emotion"),
            (self.cross_domain_comprehensible, "cross_domain_comprehensible"),
            (self.reversibility_pass, "reversibility_pass"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ghost {
    pub fragment_id: String,
    pub structural_description: String,
    pub checklist: GhostChecklist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningLevel {
    None,
    Warn,
}

/// An accepted ghost plus the advisory shallow-ghost verdict computed on entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostEntry {
    #[serde(flatten)]
    pub ghost: Ghost,
    pub shallow_warning: WarningLevel,
}

/// Unordered fragment pair, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FragmentPair {
    pub a: String,
    pub b: String,
}

impl FragmentPair {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        if x <= y {
            Self { a: x, b: y }
        } else {
            Self { a: y, b: x }
        }
    }

    /// Stable identifier, also used as the collision id: `"a:b"`.
    pub fn id(&self) -> String {
        format!("{}:{}", self.a, self.b)
    }

    pub fn parse(id: &str) -> Option<Self> {
        let (x, y) = id.split_once(':')?;
        Some(Self::new(x.trim(), y.trim()))
    }
}

impl fmt::Display for FragmentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} × {}", self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionScore {
    Boring,
    Interesting,
    Electric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub pair: FragmentPair,
    pub score: CollisionScore,
    #[serde(default)]
    pub rationale: String,
}

impl Collision {
    pub fn id(&self) -> String {
        self.pair.id()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratings {
    pub novelty: u8,
    pub feasibility: u8,
    pub resonance: u8,
    pub timing: u8,
}

impl Ratings {
    pub const fn new(novelty: u8, feasibility: u8, resonance: u8, timing: u8) -> Self {
        Self {
            novelty,
            feasibility,
            resonance,
            timing,
        }
    }

    fn named(&self) -> [(&'static str, u8); 4] {
        [
            ("novelty", self.novelty),
            ("feasibility", self.feasibility),
            ("resonance", self.resonance),
            ("timing", self.timing),
        ]
    }

    pub fn min(&self) -> u8 {
        self.named().iter().map(|(_, v)| *v).min().unwrap_or(0)
    }

    /// All four dimensions must reach 3 for a vision to advance.
    pub fn advances(&self) -> bool {
        self.min() >= 3
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vision {
    /// Assigned by the session (`v1`, `v2`, ...).
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub collision_id: String,
    pub name: String,
    pub one_line: String,
    pub emotion: String,
    pub cinematic_image: String,
    pub why_now: String,
    pub ratings: Ratings,
}

/// Stored vision with its gate verdict. Rejected visions are kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionEntry {
    #[serde(flatten)]
    pub vision: Vision,
    pub advances: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealityBridge {
    #[serde(default)]
    pub vision_id: String,
    pub mvv: String,
    #[serde(default)]
    pub existing_capabilities: Vec<String>,
    pub kill_conditions: Vec<String>,
    pub first_step_24h: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColliderStatus {
    Draft,
    Ghosting,
    Colliding,
    Crystallizing,
    Bridging,
    Completed,
    AbortedPreflight,
    AbortedNoElectric,
}

impl ColliderStatus {
    pub const LINEAR: [ColliderStatus; 6] = [
        Self::Draft,
        Self::Ghosting,
        Self::Colliding,
        Self::Crystallizing,
        Self::Bridging,
        Self::Completed,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            Self::Completed | Self::AbortedPreflight | Self::AbortedNoElectric
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Draft => "draft",
            Self::Ghosting => "ghosting",
            Self::Colliding => "colliding",
            Self::Crystallizing => "crystallizing",
            Self::Bridging => "bridging",
            Self::Completed => "completed",
            Self::AbortedPreflight => "aborted_preflight",
            Self::AbortedNoElectric => "aborted_no_electric",
        }
    }
}

impl fmt::Display for ColliderStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum CheckResult {
    Pass,
    Fail { reason: String },
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Pass)
    }
}

/// Pre-flight diversity check, run before any ghost is extracted.
///
/// Fails when every domain tag (trimmed, case-folded) is the same.
pub fn preflight_diversity(fragments: &[Fragment]) -> CheckResult {
    let tags: BTreeSet<String> = fragments.iter().map(Fragment::normalized_tag).collect();
    if tags.len() >= 2 {
        CheckResult::Pass
    } else {
        let tag = tags.into_iter().next().unwrap_or_default();
        CheckResult::Fail {
            reason: format!(
                "homogeneous fragments: every fragment is tagged '{tag}'; add at least one external-domain fragment"
            ),
        }
    }
}

/// Advisory check for a ghost that merely restates its fragment's label.
pub fn shallow_ghost_warning(fragment: &Fragment, ghost_text: &str, threshold: f64) -> WarningLevel {
    if overlap_ratio(ghost_text, &[&fragment.text, &fragment.domain_tag]) > threshold {
        WarningLevel::Warn
    } else {
        WarningLevel::None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum GateDecision {
    Advance { electric: Vec<String> },
    AbortNoElectric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateOutcome {
    #[serde(flatten)]
    pub decision: GateDecision,
    /// Every pair scored Electric (with at least the configured pair count).
    pub electric_inflation: bool,
    /// Electric share above the advisory ratio; never blocks.
    pub inflation_advisory: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarvestOutcome {
    Ghosting,
    AbortedPreflight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisionGate {
    pub vision_id: String,
    pub advances: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColliderError {
    #[error("fragment count {count} outside {min}..={max}", min = MIN_FRAGMENTS, max = MAX_FRAGMENTS)]
    CountOutOfRange { count: usize },
    #[error("{reason}")]
    HomogeneousFragments { reason: String },
    #[error("operation requires status {expected}, session is {actual}")]
    WrongPhase {
        expected: String,
        actual: ColliderStatus,
    },
    #[error("{field} must not be empty")]
    EmptyField { field: String },
    #[error("duplicate fragment id '{0}'")]
    DuplicateFragment(String),
    #[error("unknown fragment '{0}'")]
    UnknownFragment(String),
    #[error("fragment '{0}' already has an accepted ghost")]
    AlreadyGhosted(String),
    #[error("ghost checklist incomplete: {item} not asserted")]
    ChecklistIncomplete { item: &'static str },
    #[error("pair {0} is not part of the collision matrix")]
    UnknownPair(String),
    #[error("pair {0} already scored")]
    DuplicatePair(String),
    #[error("Electric collision {0} requires a rationale")]
    MissingRationale(String),
    #[error("{remaining} of {total} pairs still unscored")]
    IncompleteMatrix { remaining: usize, total: usize },
    #[error("unknown collision '{0}'")]
    UnknownCollision(String),
    #[error("collision {0} is not Electric")]
    NotElectric(String),
    #[error("rating {dimension}={value} outside 1..=5")]
    RatingOutOfRange { dimension: &'static str, value: u8 },
    #[error("unknown vision '{0}'")]
    UnknownVision(String),
    #[error("vision {0} did not pass the rating gate")]
    VisionNotAdvancing(String),
    #[error("vision {0} already has a reality bridge")]
    BridgeExists(String),
    #[error("reality bridge needs at least one kill condition")]
    EmptyKillConditions,
    #[error("no advancing vision has a reality bridge yet")]
    NoBridgedVision,
}

impl ValidationError for ColliderError {
    fn code(&self) -> &'static str {
        match self {
            Self::CountOutOfRange { .. } => "count_out_of_range",
            Self::HomogeneousFragments { .. } => "homogeneous_fragments",
            Self::WrongPhase { .. } => "wrong_phase",
            Self::EmptyField { .. } => "empty_field",
            Self::DuplicateFragment(_) => "duplicate_fragment",
            Self::UnknownFragment(_) => "unknown_fragment",
            Self::AlreadyGhosted(_) => "already_ghosted",
            Self::ChecklistIncomplete { .. } => "checklist_incomplete",
            Self::UnknownPair(_) => "unknown_pair",
            Self::DuplicatePair(_) => "duplicate_pair",
            Self::MissingRationale(_) => "missing_rationale",
            Self::IncompleteMatrix { .. } => "incomplete_matrix",
            Self::UnknownCollision(_) => "unknown_collision",
            Self::NotElectric(_) => "not_electric",
            Self::RatingOutOfRange { .. } => "rating_out_of_range",
            Self::UnknownVision(_) => "unknown_vision",
            Self::VisionNotAdvancing(_) => "vision_not_advancing",
            Self::BridgeExists(_) => "bridge_exists",
            Self::EmptyKillConditions => "empty_kill_conditions",
            Self::NoBridgedVision => "no_bridged_vision",
        }
    }

    fn field_path(&self) -> Option<String> {
        let path = match self {
            Self::CountOutOfRange { .. } | Self::HomogeneousFragments { .. } => "fragments",
            Self::EmptyField { field } => field,
            Self::DuplicateFragment(_) => "id",
            Self::UnknownFragment(_) | Self::AlreadyGhosted(_) => "fragment_id",
            Self::ChecklistIncomplete { item } => return Some(format!("checklist.{item}")),
            Self::UnknownPair(_) | Self::DuplicatePair(_) => "pair",
            Self::MissingRationale(_) => "rationale",
            Self::UnknownCollision(_) | Self::NotElectric(_) => "collision_id",
            Self::RatingOutOfRange { dimension, .. } => {
                return Some(format!("ratings.{dimension}"))
            }
            Self::UnknownVision(_) | Self::VisionNotAdvancing(_) | Self::BridgeExists(_) => {
                "vision_id"
            }
            Self::EmptyKillConditions => "kill_conditions",
            Self::WrongPhase { .. } | Self::IncompleteMatrix { .. } | Self::NoBridgedVision => {
                return None
            }
        };
        Some(path.to_string())
    }
}

type Result<T> = std::result::Result<T, ColliderError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColliderSession {
    pub id: String,
    pub theme: String,
    pub status: ColliderStatus,
    pub fragments: Vec<Fragment>,
    pub ghosts: Vec<GhostEntry>,
    pub collisions: Vec<Collision>,
    pub visions: Vec<VisionEntry>,
    pub bridges: Vec<RealityBridge>,
    pub step_timestamps: BTreeMap<String, Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

/// Builds a session from a complete fragment list: the one-shot form of
/// `draft` + `add_fragment` + `close_harvest`.
///
/// A pre-flight failure yields `HomogeneousFragments`; the aborted session is
/// still available through [`ColliderSession::draft`] for callers that need to
/// record it.
pub fn create_session(
    id: impl Into<String>,
    theme: impl Into<String>,
    fragments: Vec<Fragment>,
    now: Timestamp,
) -> std::result::Result<ColliderSession, (ColliderError, Option<Box<ColliderSession>>)> {
    if !(MIN_FRAGMENTS..=MAX_FRAGMENTS).contains(&fragments.len()) {
        return Err((
            ColliderError::CountOutOfRange {
                count: fragments.len(),
            },
            None,
        ));
    }
    let mut session = ColliderSession::draft(id, theme, now);
    for f in fragments {
        session.add_fragment(f, now).map_err(|e| (e, None))?;
    }
    match session.close_harvest(now).map_err(|e| (e, None))? {
        HarvestOutcome::Ghosting => Ok(session),
        HarvestOutcome::AbortedPreflight => {
            let reason = session.abort_reason.clone().unwrap_or_default();
            Err((ColliderError::HomogeneousFragments { reason }, Some(Box::new(session))))
        }
    }
}

impl ColliderSession {
    pub fn draft(id: impl Into<String>, theme: impl Into<String>, now: Timestamp) -> Self {
        let mut s = Self {
            id: id.into(),
            theme: theme.into(),
            status: ColliderStatus::Draft,
            fragments: Vec::new(),
            ghosts: Vec::new(),
            collisions: Vec::new(),
            visions: Vec::new(),
            bridges: Vec::new(),
            step_timestamps: BTreeMap::new(),
            gate: None,
            abort_reason: None,
        };
        s.step_timestamps
            .insert(ColliderStatus::Draft.as_str().to_string(), now);
        s
    }

    fn expect(&self, allowed: &[ColliderStatus]) -> Result<()> {
        if allowed.contains(&self.status) {
            Ok(())
        } else {
            Err(ColliderError::WrongPhase {
                expected: allowed
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join("|"),
                actual: self.status,
            })
        }
    }

    fn enter(&mut self, status: ColliderStatus, now: Timestamp) {
        self.status = status;
        self.step_timestamps.insert(status.as_str().to_string(), now);
    }

    pub fn fragment(&self, id: &str) -> Option<&Fragment> {
        self.fragments.iter().find(|f| f.id == id)
    }

    pub fn ghost(&self, fragment_id: &str) -> Option<&GhostEntry> {
        self.ghosts.iter().find(|g| g.ghost.fragment_id == fragment_id)
    }

    pub fn collision(&self, id: &str) -> Option<&Collision> {
        self.collisions.iter().find(|c| c.id() == id)
    }

    pub fn vision(&self, id: &str) -> Option<&VisionEntry> {
        self.visions.iter().find(|v| v.vision.id == id)
    }

    pub fn bridge(&self, vision_id: &str) -> Option<&RealityBridge> {
        self.bridges.iter().find(|b| b.vision_id == vision_id)
    }

    pub fn add_fragment(&mut self, mut fragment: Fragment, _now: Timestamp) -> Result<String> {
        self.expect(&[ColliderStatus::Draft])?;
        if self.fragments.len() >= MAX_FRAGMENTS {
            return Err(ColliderError::CountOutOfRange {
                count: self.fragments.len() + 1,
            });
        }
        fragment.validate("")?;
        if fragment.id.trim().is_empty() {
            fragment.id = format!("f{}", self.fragments.len() + 1);
        }
        if self.fragment(&fragment.id).is_some() {
            return Err(ColliderError::DuplicateFragment(fragment.id));
        }
        let id = fragment.id.clone();
        self.fragments.push(fragment);
        Ok(id)
    }

    /// Leaves Draft: enforces the fragment count, then runs the pre-flight
    /// diversity check. A failed check is a terminal outcome, not an error.
    pub fn close_harvest(&mut self, now: Timestamp) -> Result<HarvestOutcome> {
        self.expect(&[ColliderStatus::Draft])?;
        let count = self.fragments.len();
        if !(MIN_FRAGMENTS..=MAX_FRAGMENTS).contains(&count) {
            return Err(ColliderError::CountOutOfRange { count });
        }
        match preflight_diversity(&self.fragments) {
            CheckResult::Pass => {
                self.enter(ColliderStatus::Ghosting, now);
                Ok(HarvestOutcome::Ghosting)
            }
            CheckResult::Fail { reason } => {
                self.abort_reason = Some(reason);
                self.enter(ColliderStatus::AbortedPreflight, now);
                Ok(HarvestOutcome::AbortedPreflight)
            }
        }
    }

    pub fn attach_ghost(
        &mut self,
        ghost: Ghost,
        rules: &ColliderRules,
        now: Timestamp,
    ) -> Result<WarningLevel> {
        self.expect(&[ColliderStatus::Ghosting])?;
        let fragment = self
            .fragment(&ghost.fragment_id)
            .ok_or_else(|| ColliderError::UnknownFragment(ghost.fragment_id.clone()))?;
        if self.ghost(&ghost.fragment_id).is_some() {
            return Err(ColliderError::AlreadyGhosted(ghost.fragment_id));
        }
        require_text(&ghost.structural_description, "structural_description")
            .map_err(|field| ColliderError::EmptyField { field })?;
        if let Some(item) = ghost.checklist.first_unmet() {
            return Err(ColliderError::ChecklistIncomplete { item });
        }
        let warning = shallow_ghost_warning(
            fragment,
            &ghost.structural_description,
            rules.shallow_ghost_overlap,
        );
        self.ghosts.push(GhostEntry {
            ghost,
            shallow_warning: warning,
        });
        if self.ghosts.len() == self.fragments.len() {
            self.enter(ColliderStatus::Colliding, now);
        }
        Ok(warning)
    }

    /// Every unordered pair of fragment ids, in lexicographic order.
    pub fn all_pairs(&self) -> Vec<FragmentPair> {
        let mut ids: Vec<&str> = self.fragments.iter().map(|f| f.id.as_str()).collect();
        ids.sort_unstable();
        let mut pairs = Vec::with_capacity(ids.len() * ids.len().saturating_sub(1) / 2);
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                pairs.push(FragmentPair::new(*a, *b));
            }
        }
        pairs
    }

    pub fn enumerate_pairs(&self) -> Result<Vec<FragmentPair>> {
        self.expect(&[ColliderStatus::Colliding])?;
        Ok(self.all_pairs())
    }

    pub fn pending_pairs(&self) -> Vec<FragmentPair> {
        self.all_pairs()
            .into_iter()
            .filter(|p| !self.collisions.iter().any(|c| &c.pair == p))
            .collect()
    }

    pub fn score_collision(
        &mut self,
        pair: FragmentPair,
        score: CollisionScore,
        rationale: impl Into<String>,
        _now: Timestamp,
    ) -> Result<()> {
        self.expect(&[ColliderStatus::Colliding])?;
        if !self.all_pairs().contains(&pair) {
            return Err(ColliderError::UnknownPair(pair.id()));
        }
        if self.collisions.iter().any(|c| c.pair == pair) {
            return Err(ColliderError::DuplicatePair(pair.id()));
        }
        let rationale = rationale.into();
        if score == CollisionScore::Electric && rationale.trim().is_empty() {
            return Err(ColliderError::MissingRationale(pair.id()));
        }
        self.collisions.push(Collision {
            pair,
            score,
            rationale,
        });
        Ok(())
    }

    pub fn electric_ids(&self) -> Vec<String> {
        self.collisions
            .iter()
            .filter(|c| c.score == CollisionScore::Electric)
            .map(Collision::id)
            .collect()
    }

    /// Computes the gate verdict without changing the session.
    pub fn evaluate_gate(&self, rules: &ColliderRules) -> Result<GateOutcome> {
        let total = self.all_pairs().len();
        let remaining = self.pending_pairs().len();
        if remaining > 0 {
            return Err(ColliderError::IncompleteMatrix { remaining, total });
        }
        let electric = self.electric_ids();
        let share = if total == 0 {
            0.0
        } else {
            electric.len() as f64 / total as f64
        };
        let electric_inflation = electric.len() == total && total >= rules.inflation_min_pairs;
        let inflation_advisory = share > rules.inflation_advisory_ratio;
        let decision = if electric.is_empty() {
            GateDecision::AbortNoElectric
        } else {
            GateDecision::Advance { electric }
        };
        Ok(GateOutcome {
            decision,
            electric_inflation,
            inflation_advisory,
        })
    }

    /// Closes the collision matrix. Without any Electric collision the session
    /// ends in `AbortedNoElectric`, which is a legitimate outcome.
    pub fn collision_gate(&mut self, rules: &ColliderRules, now: Timestamp) -> Result<GateOutcome> {
        self.expect(&[ColliderStatus::Colliding])?;
        let outcome = self.evaluate_gate(rules)?;
        match outcome.decision {
            GateDecision::Advance { .. } => self.enter(ColliderStatus::Crystallizing, now),
            GateDecision::AbortNoElectric => {
                self.abort_reason = Some("no Electric collisions found".to_string());
                self.enter(ColliderStatus::AbortedNoElectric, now);
            }
        }
        self.gate = Some(outcome.clone());
        Ok(outcome)
    }

    pub fn crystallize_vision(
        &mut self,
        collision_id: &str,
        mut vision: Vision,
        _now: Timestamp,
    ) -> Result<VisionGate> {
        self.expect(&[ColliderStatus::Crystallizing])?;
        let collision = self
            .collision(collision_id)
            .ok_or_else(|| ColliderError::UnknownCollision(collision_id.to_string()))?;
        if collision.score != CollisionScore::Electric {
            return Err(ColliderError::NotElectric(collision_id.to_string()));
        }
        for (field, value) in [
            ("name", &vision.name),
            ("one_line", &vision.one_line),
            ("emotion", &vision.emotion),
            ("cinematic_image", &vision.cinematic_image),
            ("why_now", &vision.why_now),
        ] {
            require_text(value, field).map_err(|field| ColliderError::EmptyField { field })?;
        }
        for (dimension, value) in vision.ratings.named() {
            if !(1..=5).contains(&value) {
                return Err(ColliderError::RatingOutOfRange { dimension, value });
            }
        }
        vision.id = format!("v{}", self.visions.len() + 1);
        vision.collision_id = collision.id();
        let advances = vision.ratings.advances();
        let gate = VisionGate {
            vision_id: vision.id.clone(),
            advances,
        };
        self.visions.push(VisionEntry { vision, advances });
        Ok(gate)
    }

    pub fn attach_bridge(
        &mut self,
        vision_id: &str,
        mut bridge: RealityBridge,
        now: Timestamp,
    ) -> Result<()> {
        self.expect(&[ColliderStatus::Crystallizing, ColliderStatus::Bridging])?;
        let entry = self
            .vision(vision_id)
            .ok_or_else(|| ColliderError::UnknownVision(vision_id.to_string()))?;
        if !entry.advances {
            return Err(ColliderError::VisionNotAdvancing(vision_id.to_string()));
        }
        if self.bridge(vision_id).is_some() {
            return Err(ColliderError::BridgeExists(vision_id.to_string()));
        }
        require_text(&bridge.mvv, "mvv").map_err(|field| ColliderError::EmptyField { field })?;
        if bridge.kill_conditions.is_empty() {
            return Err(ColliderError::EmptyKillConditions);
        }
        for (i, k) in bridge.kill_conditions.iter().enumerate() {
            require_text(k, &format!("kill_conditions[{i}]"))
                .map_err(|field| ColliderError::EmptyField { field })?;
        }
        require_text(&bridge.first_step_24h, "first_step_24h")
            .map_err(|field| ColliderError::EmptyField { field })?;
        bridge.vision_id = vision_id.to_string();
        self.bridges.push(bridge);
        if self.status == ColliderStatus::Crystallizing {
            self.enter(ColliderStatus::Bridging, now);
        }
        Ok(())
    }

    pub fn complete(&mut self, now: Timestamp) -> Result<()> {
        self.expect(&[ColliderStatus::Bridging])?;
        let bridged = self
            .visions
            .iter()
            .any(|v| v.advances && self.bridge(&v.vision.id).is_some());
        if !bridged {
            return Err(ColliderError::NoBridgedVision);
        }
        self.enter(ColliderStatus::Completed, now);
        Ok(())
    }
}
