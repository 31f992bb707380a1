//! Batch execution of collider runs and their aggregate statistics.
//!
//! A [`Provider`] answers the judgment prompts of each step (ghost text,
//! collision scores, visions, bridges). [`ScriptedProvider`] replays a
//! fixture file; interactive or generator-backed providers plug in the same
//! way.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collider::{
    Collision, ColliderSession, ColliderStatus, CollisionScore, Fragment, FragmentPair,
    GateDecision, Ghost, GhostChecklist, HarvestOutcome, Ratings, RealityBridge, Vision,
};
use crate::config::ColliderRules;
use crate::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunResult {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub pairing_label: String,
    pub fragment_count: usize,
    /// Size of the collision matrix, C(fragments, 2).
    pub pair_count: usize,
    pub electric_count: usize,
    pub interesting_count: usize,
    pub boring_count: usize,
    /// Ratings of every crystallized vision, advancing or not.
    pub visions: Vec<Ratings>,
    pub result: RunResult,
    pub terminal_status: ColliderStatus,
}

impl RunOutcome {
    pub fn scored_count(&self) -> usize {
        self.electric_count + self.interesting_count + self.boring_count
    }

    pub fn advancing_visions(&self) -> impl Iterator<Item = &Ratings> {
        self.visions.iter().filter(|r| r.advances())
    }

    pub fn hit_rate(&self) -> Option<f64> {
        (self.pair_count > 0).then(|| self.electric_count as f64 / self.pair_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub n_runs: usize,
    pub success_count: usize,
    pub success_rate: f64,
    pub failure_rate: f64,
    pub per_run_hit_rates: Vec<f64>,
    /// Mean Electric rate over successful runs only.
    pub mean_hit_rate_successful: Option<f64>,
    /// Mean Electric rate over every run.
    pub mean_hit_rate_all: f64,
    /// Every crystallized vision across the batch, advancing or not.
    pub total_visions: usize,
    pub total_advancing_visions: usize,
    /// Crystallized visions per successful run.
    pub mean_visions_per_successful: Option<f64>,
    /// Pearson r between novelty and feasibility of all advancing visions.
    pub novelty_feasibility_r: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatchError {
    #[error("batch contains no runs")]
    EmptyBatch,
    #[error("run '{label}' has an empty collision matrix; hit rate undefined")]
    ZeroPairs { label: String },
    #[error("provider failed on run {index} ('{label}'): {message}")]
    ProviderFailure {
        index: usize,
        label: String,
        message: String,
        completed: Vec<RunOutcome>,
    },
    #[error("run {index} ('{label}') rejected by the state machine: {message}")]
    Rejected {
        index: usize,
        label: String,
        message: String,
        completed: Vec<RunOutcome>,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance")]
    ZeroVariance,
}

/// Product-moment correlation coefficient, clamped to [-1, 1].
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints(n));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn compute_stats(runs: &[RunOutcome]) -> Result<BatchStats, BatchError> {
    if runs.is_empty() {
        return Err(BatchError::EmptyBatch);
    }
    let n = runs.len();
    let mut per_run_hit_rates = Vec::with_capacity(n);
    for r in runs {
        per_run_hit_rates.push(r.hit_rate().ok_or_else(|| BatchError::ZeroPairs {
            label: r.pairing_label.clone(),
        })?);
    }
    let successes: Vec<usize> = (0..n)
        .filter(|&i| runs[i].result == RunResult::Success)
        .collect();
    let success_count = successes.len();
    let success_rate = success_count as f64 / n as f64;
    let mean_hit_rate_successful = (!successes.is_empty()).then(|| {
        successes.iter().map(|&i| per_run_hit_rates[i]).sum::<f64>() / success_count as f64
    });
    let mean_hit_rate_all = per_run_hit_rates.iter().sum::<f64>() / n as f64;
    let advancing: Vec<&Ratings> = runs.iter().flat_map(|r| r.advancing_visions()).collect();
    let total_visions = runs.iter().map(|r| r.visions.len()).sum();
    let mean_visions_per_successful =
        (success_count > 0).then(|| total_visions as f64 / success_count as f64);
    let novelty: Vec<f64> = advancing.iter().map(|r| f64::from(r.novelty)).collect();
    let feasibility: Vec<f64> = advancing.iter().map(|r| f64::from(r.feasibility)).collect();
    Ok(BatchStats {
        n_runs: n,
        success_count,
        success_rate,
        failure_rate: 1.0 - success_rate,
        per_run_hit_rates,
        mean_hit_rate_successful,
        mean_hit_rate_all,
        total_visions,
        total_advancing_visions: advancing.len(),
        mean_visions_per_successful,
        novelty_feasibility_r: pearson(&novelty, &feasibility).ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub label: String,
    #[serde(default)]
    pub theme: String,
    pub fragments: Vec<Fragment>,
}

/// Answers the judgment prompts of one collider run.
pub trait Provider {
    fn ghost(&mut self, run: &str, fragment: &Fragment) -> Result<Ghost, String>;
    fn score(
        &mut self,
        run: &str,
        pair: &FragmentPair,
        ghosts: (&Ghost, &Ghost),
    ) -> Result<(CollisionScore, String), String>;
    fn visions(&mut self, run: &str, collision: &Collision) -> Result<Vec<Vision>, String>;
    fn bridge(&mut self, run: &str, vision: &Vision) -> Result<RealityBridge, String>;
}

enum Step {
    Provider(String),
    Rejected(String),
}

fn run_one(
    config: &RunConfig,
    provider: &mut dyn Provider,
    rules: &ColliderRules,
    now: Timestamp,
) -> Result<RunOutcome, Step> {
    let label = config.label.as_str();
    let rejected = |e: crate::collider::ColliderError| Step::Rejected(e.to_string());
    let mut s = ColliderSession::draft(label, config.theme.clone(), now);
    for f in &config.fragments {
        s.add_fragment(f.clone(), now).map_err(rejected)?;
    }
    let n = s.fragments.len();
    let pair_count = n * n.saturating_sub(1) / 2;
    let mut outcome = RunOutcome {
        pairing_label: label.to_string(),
        fragment_count: n,
        pair_count,
        electric_count: 0,
        interesting_count: 0,
        boring_count: 0,
        visions: Vec::new(),
        result: RunResult::Failure,
        terminal_status: s.status,
    };
    if s.close_harvest(now).map_err(rejected)? == HarvestOutcome::AbortedPreflight {
        outcome.terminal_status = s.status;
        return Ok(outcome);
    }
    for f in s.fragments.clone() {
        let ghost = provider.ghost(label, &f).map_err(Step::Provider)?;
        s.attach_ghost(ghost, rules, now).map_err(rejected)?;
    }
    for pair in s.all_pairs() {
        let (ga, gb) = (
            &s.ghost(&pair.a).expect("all ghosted").ghost,
            &s.ghost(&pair.b).expect("all ghosted").ghost,
        );
        let (score, rationale) = provider.score(label, &pair, (ga, gb)).map_err(Step::Provider)?;
        match score {
            CollisionScore::Electric => outcome.electric_count += 1,
            CollisionScore::Interesting => outcome.interesting_count += 1,
            CollisionScore::Boring => outcome.boring_count += 1,
        }
        s.score_collision(pair, score, rationale, now).map_err(rejected)?;
    }
    let gate = s.collision_gate(rules, now).map_err(rejected)?;
    if let GateDecision::Advance { electric } = gate.decision {
        // Every vision is crystallized before the first bridge moves the
        // session on to Bridging.
        let mut advancing = Vec::new();
        for cid in electric {
            let collision = s.collision(&cid).expect("gate listed it").clone();
            for v in provider.visions(label, &collision).map_err(Step::Provider)? {
                let ratings = v.ratings;
                let verdict = s.crystallize_vision(&cid, v, now).map_err(rejected)?;
                outcome.visions.push(ratings);
                if verdict.advances {
                    advancing.push(verdict.vision_id);
                }
            }
        }
        for vid in advancing {
            let vision = s.vision(&vid).expect("stored").vision.clone();
            let bridge = provider.bridge(label, &vision).map_err(Step::Provider)?;
            s.attach_bridge(&vid, bridge, now).map_err(rejected)?;
        }
        if s.status == ColliderStatus::Bridging {
            s.complete(now).map_err(rejected)?;
        }
    }
    outcome.terminal_status = s.status;
    if outcome.visions.iter().any(Ratings::advances) {
        outcome.result = RunResult::Success;
    }
    Ok(outcome)
}

/// Runs every config through the full collider state machine. Aborted runs
/// are Failure outcomes; a provider error stops the batch and carries the
/// outcomes completed so far.
pub fn run_batch(
    configs: &[RunConfig],
    provider: &mut dyn Provider,
    rules: &ColliderRules,
    now: Timestamp,
) -> Result<Vec<RunOutcome>, BatchError> {
    let mut done = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.iter().enumerate() {
        match run_one(cfg, provider, rules, now) {
            Ok(o) => done.push(o),
            Err(Step::Provider(message)) => {
                return Err(BatchError::ProviderFailure {
                    index: i + 1,
                    label: cfg.label.clone(),
                    message,
                    completed: done,
                })
            }
            Err(Step::Rejected(message)) => {
                return Err(BatchError::Rejected {
                    index: i + 1,
                    label: cfg.label.clone(),
                    message,
                    completed: done,
                })
            }
        }
    }
    Ok(done)
}

// ---------------------------------------------------------------------------
// Scripted fixtures

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedScore {
    /// Pair id, `"f1:f3"`.
    pub pair: String,
    pub score: CollisionScore,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedVision {
    /// Electric pair id the vision crystallizes from.
    pub collision: String,
    #[serde(flatten)]
    pub vision: Vision,
    #[serde(default)]
    pub bridge: Option<RealityBridge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRun {
    pub result: RunResult,
    pub electric: usize,
    pub advancing_visions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedRun {
    #[serde(flatten)]
    pub config: RunConfig,
    /// Ghost text per fragment id; the checklist is asserted as passed.
    #[serde(default)]
    pub ghosts: BTreeMap<String, String>,
    #[serde(default)]
    pub scores: Vec<ScriptedScore>,
    #[serde(default)]
    pub visions: Vec<ScriptedVision>,
    #[serde(default)]
    pub expected: Option<ExpectedRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFixture {
    #[serde(default)]
    pub description: String,
    pub runs: Vec<ScriptedRun>,
}

impl BatchFixture {
    pub fn configs(&self) -> Vec<RunConfig> {
        self.runs.iter().map(|r| r.config.clone()).collect()
    }

    pub fn provider(&self) -> ScriptedProvider {
        ScriptedProvider {
            runs: self
                .runs
                .iter()
                .map(|r| (r.config.label.clone(), r.clone()))
                .collect(),
        }
    }
}

/// Replays the answers recorded in a [`BatchFixture`].
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    runs: BTreeMap<String, ScriptedRun>,
}

impl ScriptedProvider {
    fn script(&self, run: &str) -> Result<&ScriptedRun, String> {
        self.runs
            .get(run)
            .ok_or_else(|| format!("no script for run '{run}'"))
    }
}

impl Provider for ScriptedProvider {
    fn ghost(&mut self, run: &str, fragment: &Fragment) -> Result<Ghost, String> {
        let text = self
            .script(run)?
            .ghosts
            .get(&fragment.id)
            .ok_or_else(|| format!("no scripted ghost for fragment {}", fragment.id))?;
        Ok(Ghost {
            fragment_id: fragment.id.clone(),
            structural_description: text.clone(),
            checklist: GhostChecklist::all(),
        })
    }

    fn score(
        &mut self,
        run: &str,
        pair: &FragmentPair,
        _ghosts: (&Ghost, &Ghost),
    ) -> Result<(CollisionScore, String), String> {
        let id = pair.id();
        self.script(run)?
            .scores
            .iter()
            .find(|s| FragmentPair::parse(&s.pair).map(|p| p.id()) == Some(id.clone()))
            .map(|s| (s.score, s.rationale.clone()))
            .ok_or_else(|| format!("no scripted score for pair {id}"))
    }

    fn visions(&mut self, run: &str, collision: &Collision) -> Result<Vec<Vision>, String> {
        let id = collision.id();
        Ok(self
            .script(run)?
            .visions
            .iter()
            .filter(|v| FragmentPair::parse(&v.collision).map(|p| p.id()) == Some(id.clone()))
            .map(|v| v.vision.clone())
            .collect())
    }

    fn bridge(&mut self, run: &str, vision: &Vision) -> Result<RealityBridge, String> {
        self.script(run)?
            .visions
            .iter()
            .find(|v| v.vision.name == vision.name)
            .and_then(|v| v.bridge.clone())
            .ok_or_else(|| format!("no scripted bridge for vision '{}'", vision.name))
    }
}
