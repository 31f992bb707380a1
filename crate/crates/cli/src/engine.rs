//! The operations behind every CLI subcommand and HTTP endpoint.
//!
//! Both front ends translate their input into the types below and call the
//! same [`Engine`] methods, so identical logical input appends identical
//! ledger records whichever path it came through.

use std::path::Path;

use protoctl_core::batch::{compute_stats, run_batch, BatchFixture, BatchStats, RunOutcome};
use protoctl_core::collider::{
    preflight_diversity, ColliderSession, CollisionScore, Fragment, FragmentPair, Ghost,
    HarvestOutcome, RealityBridge, Vision,
};
use protoctl_core::config::EngineConfig;
use protoctl_core::integration::{IntegrationRun, ManualAxes};
use protoctl_core::ledger::{
    accuracy_summary, diff_signals, evaluate_prediction, record_prediction, score_rubric,
    AccuracySummary, Outcome, Payload, PredictionRecord, RubricScore, SessionRecord, SignalDelta,
    Store,
};
use protoctl_core::precog::{
    evaluate_timing_grid_with, ActionItem, ContrarianView, ConvergencePoint, PrecogSession,
    Signal, TimingGrid,
};
use protoctl_core::Timestamp;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ServiceError;

type Result<T> = std::result::Result<T, ServiceError>;

/// Body of a session-creation request, tagged by `protocol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum NewSession {
    Ghosty {
        theme: String,
        #[serde(default)]
        fragments: Vec<Fragment>,
    },
    Precog {
        theme: String,
        #[serde(default)]
        horizon: String,
    },
    /// Starts a collider run from the convergences of a finalized PRECOG
    /// session.
    Integration {
        precog_session_id: String,
        convergences: Vec<String>,
        externals: Vec<Fragment>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoInput {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreInput {
    pub pair: String,
    pub score: CollisionScore,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisionInput {
    /// Electric pair id, `"f1:f4"`.
    pub collision: String,
    #[serde(flatten)]
    pub vision: Vision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridInput {
    pub label: String,
    #[serde(flatten)]
    pub grid: TimingGrid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapInput {
    pub vision_id: String,
    #[serde(flatten)]
    pub axes: ManualAxes,
}

/// One protocol step. The HTTP step name is the variant name in snake case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", content = "input", rename_all = "snake_case")]
pub enum Step {
    Fragment(Fragment),
    Harvest(NoInput),
    Ghost(Ghost),
    Score(ScoreInput),
    Gate(NoInput),
    Vision(VisionInput),
    Bridge(RealityBridge),
    Complete(NoInput),
    Signal(Signal),
    Convergence(ConvergencePoint),
    Contrarian(ContrarianView),
    Grid(GridInput),
    Action(ActionItem),
    Finalize(NoInput),
    Map(MapInput),
}

impl Step {
    /// Builds a step from its name and a JSON body; a missing body counts as
    /// an empty object.
    pub fn from_parts(name: &str, body: Value) -> Result<Self> {
        let input = if body.is_null() { json!({}) } else { body };
        serde_json::from_value(json!({ "step": name, "input": input }))
            .map_err(|e| ServiceError::BadRequest(format!("step '{name}': {e}")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fragment(_) => "fragment",
            Self::Harvest(_) => "harvest",
            Self::Ghost(_) => "ghost",
            Self::Score(_) => "score",
            Self::Gate(_) => "gate",
            Self::Vision(_) => "vision",
            Self::Bridge(_) => "bridge",
            Self::Complete(_) => "complete",
            Self::Signal(_) => "signal",
            Self::Convergence(_) => "convergence",
            Self::Contrarian(_) => "contrarian",
            Self::Grid(_) => "grid",
            Self::Action(_) => "action",
            Self::Finalize(_) => "finalize",
            Self::Map(_) => "map",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationInput {
    pub outcome: Outcome,
    #[serde(default)]
    pub timing_accuracy: Option<String>,
    #[serde(default)]
    pub contrarian_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricInput {
    pub target_ref: String,
    pub scores: Vec<i64>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryDiff {
    pub theme_key: String,
    pub previous_session: String,
    pub current_session: String,
    pub deltas: Vec<SignalDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub runs: Vec<RunOutcome>,
    pub stats: BatchStats,
}

pub struct Engine {
    store: Store,
    config: EngineConfig,
}

impl Engine {
    pub fn open(path: impl AsRef<Path>, config: EngineConfig) -> Result<Self> {
        Ok(Self {
            store: Store::open(path)?,
            config,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    fn latest(&mut self, id: &str) -> Result<SessionRecord> {
        self.store.refresh()?;
        self.store
            .latest(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Current snapshot of any stored entity.
    pub fn show(&mut self, id: &str) -> Result<SessionRecord> {
        self.latest(id)
    }

    pub fn create_session(&mut self, req: NewSession, now: Timestamp) -> Result<Value> {
        self.store.refresh()?;
        match req {
            NewSession::Ghosty { theme, fragments } => {
                let mut s = ColliderSession::draft(self.store.next_entity_id("ghosty"), theme, now);
                for (i, f) in fragments.into_iter().enumerate() {
                    s.add_fragment(f, now).map_err(|e| {
                        let mut err = ServiceError::validation(&e);
                        prefix_field(&mut err, &format!("fragments[{i}]"));
                        err
                    })?;
                }
                let id = s.id.clone();
                let status = s.status.as_str();
                self.store.append_payload(Payload::Collider(s), now)?;
                Ok(json!({ "session_id": id, "status": status }))
            }
            NewSession::Precog { theme, horizon } => {
                if theme.trim().is_empty() {
                    return Err(ServiceError::invalid("empty_field", "theme must not be empty", Some("theme")));
                }
                let s = PrecogSession::new(self.store.next_entity_id("precog"), theme, horizon, now);
                let id = s.id.clone();
                let status = s.status.as_str();
                self.store.append_payload(Payload::Precog(s), now)?;
                Ok(json!({ "session_id": id, "status": status }))
            }
            NewSession::Integration {
                precog_session_id,
                convergences,
                externals,
            } => {
                let precog = match self.latest(&precog_session_id)?.payload {
                    Payload::Precog(p) => p,
                    _ => return Err(wrong_kind(&precog_session_id, "precog")),
                };
                let collider_id = self.store.next_entity_id("ghosty");
                let run_id = self.store.next_entity_id("integration");
                let (run, fragments) = IntegrationRun::start(
                    run_id.clone(),
                    &precog,
                    convergences,
                    externals,
                    collider_id.clone(),
                )
                .map_err(|e| ServiceError::validation(&e))?;
                let mut s = ColliderSession::draft(collider_id.clone(), precog.theme_key.clone(), now);
                for f in fragments {
                    s.add_fragment(f, now).map_err(|e| ServiceError::validation(&e))?;
                }
                let fragment_ids: Vec<String> = s.fragments.iter().map(|f| f.id.clone()).collect();
                self.store.append_payload(Payload::Collider(s), now)?;
                self.store.append_payload(Payload::Integration(run), now)?;
                Ok(json!({
                    "session_id": run_id,
                    "collider_session_id": collider_id,
                    "fragments": fragment_ids,
                }))
            }
        }
    }

    /// Applies one step and appends the new snapshot when the session
    /// changed, even if the step itself reports an error (a pre-flight abort
    /// is recorded and still surfaces as a validation failure).
    pub fn apply(&mut self, id: &str, step: Step, now: Timestamp) -> Result<Value> {
        let record = self.latest(id)?;
        let rules = self.config.clone();
        match record.payload {
            Payload::Collider(before) => {
                let mut s = before.clone();
                let out = collider_step(&mut s, step, &rules, now);
                let status = s.status.as_str();
                if s != before {
                    self.store.append_payload(Payload::Collider(s), now)?;
                }
                out.map(|result| json!({ "session_id": id, "status": status, "result": result }))
            }
            Payload::Precog(before) => {
                let mut s = before.clone();
                let out = precog_step(&mut s, step, &rules, now);
                let status = s.status.as_str();
                if s != before {
                    self.store.append_payload(Payload::Precog(s), now)?;
                }
                out.map(|result| json!({ "session_id": id, "status": status, "result": result }))
            }
            Payload::Integration(mut run) => {
                let Step::Map(input) = step else {
                    return Err(wrong_step(&step, "integration"));
                };
                let collider = match self.latest(&run.collider_session_id)?.payload {
                    Payload::Collider(c) => c,
                    _ => return Err(wrong_kind(&run.collider_session_id, "collider")),
                };
                let mapping = run
                    .map_vision(
                        &collider,
                        &input.vision_id,
                        input.axes,
                        &rules.timing,
                        &rules.readiness,
                    )
                    .map_err(|e| ServiceError::validation(&e))?
                    .clone();
                self.store.append_payload(Payload::Integration(run), now)?;
                Ok(json!({
                    "session_id": id,
                    "result": {
                        "mapping": mapping,
                        "display": mapping.judgment.to_string(),
                    },
                }))
            }
            _ => Err(wrong_kind(id, "session")),
        }
    }

    /// Gate and flag state of a session, computed without changing it.
    pub fn gates(&mut self, id: &str) -> Result<Value> {
        let record = self.latest(id)?;
        match record.payload {
            Payload::Collider(s) => {
                let gate = match s.evaluate_gate(&self.config.collider) {
                    Ok(g) => serde_json::to_value(g).expect("serializable"),
                    Err(e) => json!({ "pending": e.to_string() }),
                };
                let warnings: Vec<Value> = s
                    .ghosts
                    .iter()
                    .map(|g| json!({ "fragment_id": g.ghost.fragment_id, "shallow_warning": g.shallow_warning }))
                    .collect();
                let visions: Vec<Value> = s
                    .visions
                    .iter()
                    .map(|v| json!({ "vision_id": v.vision.id, "advances": v.advances }))
                    .collect();
                Ok(json!({
                    "session_id": s.id,
                    "status": s.status.as_str(),
                    "preflight": preflight_diversity(&s.fragments),
                    "ghost_warnings": warnings,
                    "pending_pairs": s.pending_pairs().iter().map(FragmentPair::id).collect::<Vec<_>>(),
                    "collision_gate": gate,
                    "recorded_gate": s.gate,
                    "electric": s.electric_ids(),
                    "visions": visions,
                    "abort_reason": s.abort_reason,
                }))
            }
            Payload::Precog(s) => {
                let advisories: Vec<Value> = s
                    .convergences
                    .iter()
                    .filter_map(|c| {
                        c.hypothesis_advisory
                            .as_ref()
                            .map(|a| json!({ "convergence_id": c.convergence.id, "advisory": a }))
                    })
                    .collect();
                Ok(json!({
                    "session_id": s.id,
                    "status": s.status.as_str(),
                    "escalation_required": s.escalation_required(),
                    "grid_evaluations": s.grid_evaluations,
                    "hypothesis_advisories": advisories,
                    "completion_gaps": s.completion_gaps(),
                }))
            }
            Payload::Integration(run) => Ok(json!({
                "session_id": run.id,
                "mappings": run.mappings,
            })),
            _ => Err(wrong_kind(id, "session")),
        }
    }

    /// Signal deltas between the two most recent PRECOG sessions of a theme.
    pub fn history_diff(&mut self, theme_key: &str) -> Result<HistoryDiff> {
        self.store.refresh()?;
        let sessions: Vec<PrecogSession> = self
            .store
            .latest_snapshots()
            .into_iter()
            .filter_map(|r| match &r.payload {
                Payload::Precog(p) if p.theme_key == theme_key => Some(p.clone()),
                _ => None,
            })
            .collect();
        let [.., prev, curr] = sessions.as_slice() else {
            return Err(ServiceError::invalid(
                "insufficient_history",
                format!(
                    "theme '{theme_key}' has {} recorded session(s); a diff needs two",
                    sessions.len()
                ),
                Some("theme"),
            ));
        };
        Ok(HistoryDiff {
            theme_key: theme_key.to_string(),
            previous_session: prev.id.clone(),
            current_session: curr.id.clone(),
            deltas: diff_signals(&prev.signals, &curr.signals)?,
        })
    }

    pub fn add_prediction(&mut self, p: PredictionRecord, now: Timestamp) -> Result<Value> {
        let id = record_prediction(&mut self.store, p, now)?;
        Ok(json!({ "prediction_id": id }))
    }

    pub fn evaluate_prediction(
        &mut self,
        id: &str,
        input: EvaluationInput,
        now: Timestamp,
    ) -> Result<PredictionRecord> {
        Ok(evaluate_prediction(
            &mut self.store,
            id,
            input.outcome,
            input.timing_accuracy,
            input.contrarian_value,
            now,
        )?)
    }

    pub fn accuracy(&mut self, theme_key: &str) -> Result<AccuracySummary> {
        self.store.refresh()?;
        Ok(accuracy_summary(&self.store, theme_key))
    }

    pub fn score_rubric(&mut self, input: RubricInput, now: Timestamp) -> Result<RubricScore> {
        let mut score = score_rubric(&input.target_ref, &input.scores, input.labels.as_deref())
            .map_err(|e| ServiceError::validation(&e))?;
        self.store.refresh()?;
        score.id = self.store.next_entity_id("rubric");
        self.store.append_payload(Payload::Rubric(score.clone()), now)?;
        Ok(score)
    }

    /// Stand-alone timing grid judgment; nothing is recorded.
    pub fn evaluate_grid(&self, grid: &TimingGrid) -> protoctl_core::precog::TimingJudgment {
        evaluate_timing_grid_with(grid, &self.config.timing)
    }

    /// Replays a fixture file. Batch runs are not written to the ledger.
    pub fn run_fixture(&self, fixture: &BatchFixture, now: Timestamp) -> Result<BatchReport> {
        let mut provider = fixture.provider();
        let runs = run_batch(&fixture.configs(), &mut provider, &self.config.collider, now)
            .map_err(|e| ServiceError::invalid("batch_failed", e.to_string(), None))?;
        let stats =
            compute_stats(&runs).map_err(|e| ServiceError::invalid("batch_failed", e.to_string(), None))?;
        Ok(BatchReport { runs, stats })
    }
}

fn prefix_field(err: &mut ServiceError, prefix: &str) {
    if let ServiceError::Validation { field_path, .. } = err {
        *field_path = Some(match field_path.take() {
            Some(p) => format!("{prefix}.{p}"),
            None => prefix.to_string(),
        });
    }
}

fn wrong_kind(id: &str, expected: &str) -> ServiceError {
    ServiceError::invalid(
        "wrong_entity",
        format!("'{id}' is not a {expected}"),
        Some("session_id"),
    )
}

fn wrong_step(step: &Step, protocol: &str) -> ServiceError {
    ServiceError::invalid(
        "wrong_protocol",
        format!("step '{}' does not apply to a {protocol} session", step.name()),
        Some("step"),
    )
}

fn collider_step(
    s: &mut ColliderSession,
    step: Step,
    rules: &EngineConfig,
    now: Timestamp,
) -> Result<Value> {
    let v = |e: protoctl_core::collider::ColliderError| ServiceError::validation(&e);
    match step {
        Step::Fragment(f) => {
            let id = s.add_fragment(f, now).map_err(v)?;
            Ok(json!({ "fragment_id": id }))
        }
        Step::Harvest(_) => {
            let outcome = close_harvest(s, now)?;
            Ok(json!({ "outcome": harvest_name(outcome) }))
        }
        Step::Ghost(g) => {
            // The first ghost closes the harvest implicitly.
            if s.status == protoctl_core::collider::ColliderStatus::Draft {
                close_harvest(s, now)?;
            }
            let fragment_id = g.fragment_id.clone();
            let warning = s.attach_ghost(g, &rules.collider, now).map_err(v)?;
            Ok(json!({ "fragment_id": fragment_id, "shallow_warning": warning }))
        }
        Step::Score(input) => {
            let pair = FragmentPair::parse(&input.pair).ok_or_else(|| {
                ServiceError::invalid(
                    "bad_pair",
                    format!("'{}' is not of the form a:b", input.pair),
                    Some("pair"),
                )
            })?;
            let id = pair.id();
            s.score_collision(pair, input.score, input.rationale, now).map_err(v)?;
            Ok(json!({ "pair": id, "score": input.score, "pending": s.pending_pairs().len() }))
        }
        Step::Gate(_) => {
            let outcome = s.collision_gate(&rules.collider, now).map_err(v)?;
            Ok(serde_json::to_value(outcome).expect("serializable"))
        }
        Step::Vision(input) => {
            let collision = FragmentPair::parse(&input.collision)
                .map(|p| p.id())
                .unwrap_or(input.collision);
            let gate = s.crystallize_vision(&collision, input.vision, now).map_err(v)?;
            Ok(serde_json::to_value(gate).expect("serializable"))
        }
        Step::Bridge(b) => {
            let vision_id = b.vision_id.clone();
            s.attach_bridge(&vision_id, b, now).map_err(v)?;
            Ok(json!({ "vision_id": vision_id }))
        }
        Step::Complete(_) => {
            s.complete(now).map_err(v)?;
            Ok(json!({}))
        }
        other => Err(wrong_step(&other, "ghosty")),
    }
}

/// Runs the pre-flight. An abort is kept on the session (the caller persists
/// it) and reported as a validation failure.
fn close_harvest(s: &mut ColliderSession, now: Timestamp) -> Result<HarvestOutcome> {
    let outcome = s.close_harvest(now).map_err(|e| ServiceError::validation(&e))?;
    if outcome == HarvestOutcome::AbortedPreflight {
        return Err(ServiceError::invalid(
            "homogeneous_fragments",
            s.abort_reason.clone().unwrap_or_default(),
            Some("fragments"),
        ));
    }
    Ok(outcome)
}

fn harvest_name(o: HarvestOutcome) -> &'static str {
    match o {
        HarvestOutcome::Ghosting => "ghosting",
        HarvestOutcome::AbortedPreflight => "aborted_preflight",
    }
}

fn precog_step(
    s: &mut PrecogSession,
    step: Step,
    rules: &EngineConfig,
    now: Timestamp,
) -> Result<Value> {
    let v = |e: protoctl_core::precog::PrecogError| ServiceError::validation(&e);
    match step {
        Step::Signal(sig) => {
            let key = sig.key.clone();
            s.add_signal(sig, now).map_err(v)?;
            Ok(json!({ "key": key, "signals": s.signals.len() }))
        }
        Step::Convergence(c) => {
            let id = s.add_convergence(c, now).map_err(v)?;
            let advisory = s
                .convergences
                .last()
                .and_then(|c| c.hypothesis_advisory.clone());
            Ok(json!({ "convergence_id": id, "hypothesis_advisory": advisory }))
        }
        Step::Contrarian(view) => {
            let n = view.scenarios.len();
            s.set_contrarian(view, now).map_err(v)?;
            Ok(json!({ "scenarios": n }))
        }
        Step::Grid(input) => {
            let judgment = s
                .add_grid_evaluation(input.label.clone(), input.grid, &rules.timing, now)
                .map_err(v)?;
            Ok(json!({
                "label": input.label,
                "judgment": judgment,
                "display": judgment.to_string(),
            }))
        }
        Step::Action(item) => {
            let category = item.category;
            s.add_action(item, now).map_err(v)?;
            Ok(json!({ "category": category, "actions": s.actions.len() }))
        }
        Step::Finalize(_) => {
            s.finalize(now).map_err(v)?;
            Ok(json!({}))
        }
        other => Err(wrong_step(&other, "precog")),
    }
}

/// Loads a batch fixture file.
pub fn load_fixture(path: &Path) -> Result<BatchFixture> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| ServiceError::BadRequest(format!("{}: {e}", path.display())))
}
