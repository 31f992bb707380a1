//! Command-line grammar and dispatch.
//!
//! Exit codes: 0 success, 1 validation error, 2 storage error, 64 usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use protoctl_core::collider::{Fragment, Ghost, GhostChecklist, Ratings, RealityBridge, SourceKind, Vision};
use protoctl_core::integration::ManualAxes;
use protoctl_core::ledger::{DateRange, PredictionRecord};
use protoctl_core::precog::{
    ActionCategory, ActionItem, Competitive, ContrarianView, ConvergencePoint, Direction, Evidence,
    ExternalWindow, Level, MarketPhase, Readiness, Signal, SignalSource, Strength, TimingGrid,
};
use protoctl_core::Confidence;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::engine::{
    load_fixture, Engine, EvaluationInput, GridInput, MapInput, NewSession, NoInput, RubricInput,
    ScoreInput, Step, VisionInput,
};
use crate::error::ServiceError;
use crate::export::{export, Format};
use crate::generator::{GeneratorClient, GeneratorRequest, StepKind};
use crate::settings::{Settings, DEFAULT_STORE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_STORAGE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Parses an enum value by its wire name; dashes count as underscores.
fn wire<T: DeserializeOwned>(raw: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(raw.trim().replace('-', "_").to_lowercase()))
        .map_err(|_| format!("unrecognised value '{raw}'"))
}

fn json_arg(raw: &str) -> Result<Value, String> {
    let text = match raw.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?,
        None => raw.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn evidence_arg(raw: &str) -> Result<Evidence, String> {
    let (claim, source) = raw
        .split_once('|')
        .ok_or_else(|| format!("evidence '{raw}' must look like 'claim|source'"))?;
    Ok(Evidence {
        claim: claim.trim().to_string(),
        source: source.trim().to_string(),
    })
}

#[derive(Debug, Parser)]
#[command(name = "protoctl", version, about = "Run GHOSTY COLLIDER and PRECOG sessions against an append-only ledger")]
pub struct Cli {
    /// Ledger file.
    #[arg(long, global = true, env = "PROTOCTL_STORE", default_value = DEFAULT_STORE)]
    pub store: PathBuf,
    /// Threshold config file (TOML).
    #[arg(long, global = true, env = "PROTOCTL_CONFIG")]
    pub config: Option<PathBuf>,
    /// Stamp every step with this RFC 3339 instant instead of the clock.
    #[arg(long, global = true, env = "PROTOCTL_FIXED_TIME")]
    pub fixed_time: Option<String>,
    #[arg(long, global = true, env = "PROTOCTL_GENERATOR_URL")]
    pub generator_url: Option<String>,
    #[arg(long, global = true, env = "PROTOCTL_GENERATOR_TIMEOUT_MS", default_value_t = 30_000)]
    pub generator_timeout_ms: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    #[command(subcommand)]
    Session(SessionCmd),
    #[command(subcommand)]
    Fragment(FragmentCmd),
    #[command(subcommand)]
    Ghost(GhostCmd),
    #[command(subcommand)]
    Collide(CollideCmd),
    #[command(subcommand)]
    Vision(VisionCmd),
    #[command(subcommand)]
    Bridge(BridgeCmd),
    #[command(subcommand)]
    Signal(SignalCmd),
    #[command(subcommand)]
    Converge(ConvergeCmd),
    #[command(subcommand)]
    Contrarian(ContrarianCmd),
    #[command(subcommand)]
    Grid(GridCmd),
    #[command(subcommand)]
    Action(ActionCmd),
    #[command(subcommand)]
    Integrate(IntegrateCmd),
    #[command(subcommand)]
    History(HistoryCmd),
    #[command(subcommand)]
    Predict(PredictCmd),
    #[command(subcommand)]
    Score(ScoreCmd),
    #[command(subcommand)]
    Batch(BatchCmd),
    /// Write a session report to stdout.
    Export {
        #[arg(long)]
        session: String,
        #[arg(long, default_value = "md")]
        format: Format,
    },
    /// Serve the HTTP session API on localhost.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Ask the configured generator for a candidate text. Nothing is saved.
    Generate {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = wire::<StepKind>)]
        kind: StepKind,
        /// Fragment, pair or vision the candidate is for.
        #[arg(long)]
        focus: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SessionCmd {
    New {
        #[arg(long, value_parser = ["ghosty", "precog"])]
        protocol: String,
        #[arg(long)]
        theme: String,
        #[arg(long, default_value = "")]
        horizon: String,
    },
    Show { id: String },
    Gates { id: String },
    /// Close the fragment harvest and run the diversity pre-flight.
    Harvest { id: String },
    /// Mark a bridged collider session completed.
    Complete { id: String },
    /// Finalize a PRECOG session.
    Finalize { id: String },
}

#[derive(Debug, Subcommand)]
pub enum FragmentCmd {
    Add {
        #[arg(long)]
        session: String,
        #[arg(long)]
        text: String,
        #[arg(long)]
        tag: String,
        #[arg(long, default_value = "observation", value_parser = wire::<SourceKind>)]
        kind: SourceKind,
        #[arg(long, value_parser = wire::<Confidence>)]
        confidence: Option<Confidence>,
        #[arg(long)]
        id: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct ChecklistArgs {
    #[arg(long)]
    uses_verbs: bool,
    #[arg(long)]
    includes_emotion: bool,
    #[arg(long)]
    cross_domain: bool,
    #[arg(long)]
    reversible: bool,
    /// Assert all four checklist items.
    #[arg(long)]
    checklist_all: bool,
}

impl ChecklistArgs {
    fn checklist(&self) -> GhostChecklist {
        if self.checklist_all {
            return GhostChecklist::all();
        }
        GhostChecklist {
            uses_verbs: self.uses_verbs,
            includes_emotion: self.includes_emotion,
            cross_domain_comprehensible: self.cross_domain,
            reversibility_pass: self.reversible,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum GhostCmd {
    Set {
        #[arg(long)]
        session: String,
        #[arg(long)]
        fragment: String,
        #[arg(long)]
        text: String,
        #[command(flatten)]
        checklist: ChecklistArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum CollideCmd {
    Score {
        #[arg(long)]
        session: String,
        #[arg(long)]
        pair: String,
        #[arg(long, value_parser = wire::<protoctl_core::collider::CollisionScore>)]
        score: protoctl_core::collider::CollisionScore,
        #[arg(long, default_value = "")]
        rationale: String,
    },
    Gate {
        #[arg(long)]
        session: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum VisionCmd {
    Add {
        #[arg(long)]
        session: String,
        #[arg(long)]
        collision: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        one_line: String,
        #[arg(long)]
        emotion: String,
        #[arg(long)]
        image: String,
        #[arg(long)]
        why_now: String,
        #[arg(long)]
        novelty: u8,
        #[arg(long)]
        feasibility: u8,
        #[arg(long)]
        resonance: u8,
        #[arg(long)]
        timing: u8,
    },
}

#[derive(Debug, Subcommand)]
pub enum BridgeCmd {
    Set {
        #[arg(long)]
        session: String,
        #[arg(long)]
        vision: String,
        #[arg(long)]
        mvv: String,
        #[arg(long = "capability")]
        capabilities: Vec<String>,
        #[arg(long = "kill")]
        kill_conditions: Vec<String>,
        #[arg(long)]
        first_step: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum SignalCmd {
    Add {
        #[arg(long)]
        session: String,
        #[arg(long)]
        key: String,
        #[arg(long)]
        description: String,
        #[arg(long = "evidence", value_parser = evidence_arg)]
        evidence: Vec<Evidence>,
        #[arg(long, value_parser = wire::<Strength>)]
        strength: Strength,
        #[arg(long, value_parser = wire::<Direction>)]
        direction: Direction,
        #[arg(long, value_parser = wire::<Confidence>)]
        confidence: Option<Confidence>,
        #[arg(long, value_parser = wire::<SignalSource>)]
        source: SignalSource,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConvergeCmd {
    Add {
        #[arg(long)]
        session: String,
        /// Contributing signal keys, comma separated.
        #[arg(long, value_delimiter = ',')]
        signals: Vec<String>,
        #[arg(long)]
        hypothesis: String,
        #[arg(long)]
        causal_logic: String,
        #[arg(long, value_parser = wire::<Level>)]
        confidence: Level,
        #[arg(long)]
        rationale: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ContrarianCmd {
    /// Record the contrarian view given as JSON (inline or `@file`).
    Set {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = json_arg)]
        json: Value,
    },
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_parser = wire::<MarketPhase>)]
    market: MarketPhase,
    #[arg(long, value_parser = wire::<Competitive>)]
    competitive: Competitive,
    #[arg(long, value_parser = wire::<ExternalWindow>)]
    external: ExternalWindow,
    #[arg(long, default_value = "")]
    annotation: String,
}

#[derive(Debug, Subcommand)]
pub enum GridCmd {
    /// Judge a timing grid. With `--session` the judgment is recorded.
    Eval {
        #[command(flatten)]
        axes: GridArgs,
        #[arg(long, value_parser = parse_readiness)]
        readiness: Readiness,
        #[arg(long, requires = "label")]
        session: Option<String>,
        #[arg(long)]
        label: Option<String>,
    },
}

/// Accepts the short form `partial` besides the wire names.
fn parse_readiness(raw: &str) -> Result<Readiness, String> {
    match raw {
        "partial" => Ok(Readiness::PartiallyReady),
        other => wire(other),
    }
}

#[derive(Debug, Subcommand)]
pub enum ActionCmd {
    Add {
        #[arg(long)]
        session: String,
        #[arg(long, value_parser = wire::<ActionCategory>)]
        category: ActionCategory,
        #[arg(long)]
        action: String,
        #[arg(long)]
        trigger: String,
        #[arg(long)]
        cost: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum IntegrateCmd {
    /// Seed a collider session from a finalized PRECOG session.
    Start {
        #[arg(long)]
        precog: String,
        #[arg(long = "convergence")]
        convergences: Vec<String>,
        /// External fragment as `domain-tag|text`.
        #[arg(long = "external")]
        externals: Vec<String>,
    },
    /// Map a bridged vision onto a timing grid and action items.
    Map {
        #[arg(long)]
        session: String,
        #[arg(long)]
        vision: String,
        #[command(flatten)]
        axes: GridArgs,
        /// Override the readiness derived from the vision's feasibility.
        #[arg(long, value_parser = parse_readiness)]
        readiness: Option<Readiness>,
    },
}

#[derive(Debug, Subcommand)]
pub enum HistoryCmd {
    Diff {
        #[arg(long)]
        theme: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum PredictCmd {
    Add {
        #[arg(long)]
        theme: String,
        #[arg(long)]
        statement: String,
        #[arg(long)]
        start: NaiveDate,
        #[arg(long)]
        end: NaiveDate,
    },
    Eval {
        #[arg(long)]
        id: String,
        #[arg(long, value_parser = wire::<protoctl_core::ledger::Outcome>)]
        outcome: protoctl_core::ledger::Outcome,
        #[arg(long)]
        timing_accuracy: Option<String>,
        #[arg(long)]
        contrarian_value: Option<String>,
    },
    Summary {
        #[arg(long)]
        theme: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScoreCmd {
    /// Score an artifact on the eight-dimension rubric.
    Rubric {
        #[arg(long)]
        target: String,
        /// Eight scores 0..=10, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        scores: Vec<i64>,
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BatchCmd {
    Run {
        #[arg(long)]
        fixtures: PathBuf,
    },
}

/// Output of a successful command.
enum Output {
    Json(Value),
    Text(String),
}

fn settings_from(cli: &Cli) -> Result<Settings, ServiceError> {
    let engine = match &cli.config {
        Some(path) => Settings::load_engine_config(path).map_err(|e| ServiceError::BadRequest(format!("{e:#}")))?,
        None => Default::default(),
    };
    let fixed_time = match cli.fixed_time.as_deref().filter(|s| !s.is_empty()) {
        Some(raw) => Some(Settings::parse_fixed_time(raw).map_err(|e| ServiceError::BadRequest(format!("{e:#}")))?),
        None => None,
    };
    Ok(Settings {
        store: cli.store.clone(),
        engine,
        generator_url: cli.generator_url.clone(),
        generator_timeout: Duration::from_millis(cli.generator_timeout_ms),
        fixed_time,
    })
}

fn step(engine: &mut Engine, settings: &Settings, session: &str, step: Step) -> Result<Output, ServiceError> {
    engine.apply(session, step, settings.now()).map(Output::Json)
}

fn dispatch(cli: Cli) -> Result<Output, ServiceError> {
    let settings = settings_from(&cli)?;
    let mut engine = Engine::open(&settings.store, settings.engine.clone())?;
    let now = settings.now();
    let e = &mut engine;
    let s = &settings;
    match cli.command {
        Command::Session(cmd) => match cmd {
            SessionCmd::New { protocol, theme, horizon } => {
                let req = if protocol == "ghosty" {
                    NewSession::Ghosty { theme, fragments: Vec::new() }
                } else {
                    NewSession::Precog { theme, horizon }
                };
                e.create_session(req, now).map(Output::Json)
            }
            SessionCmd::Show { id } => Ok(Output::Json(serde_json::to_value(e.show(&id)?).expect("serializable"))),
            SessionCmd::Gates { id } => e.gates(&id).map(Output::Json),
            SessionCmd::Harvest { id } => step(e, s, &id, Step::Harvest(NoInput {})),
            SessionCmd::Complete { id } => step(e, s, &id, Step::Complete(NoInput {})),
            SessionCmd::Finalize { id } => step(e, s, &id, Step::Finalize(NoInput {})),
        },
        Command::Fragment(FragmentCmd::Add { session, text, tag, kind, confidence, id }) => {
            let fragment = Fragment {
                id: id.unwrap_or_default(),
                text,
                domain_tag: tag,
                source_kind: kind,
                confidence,
            };
            step(e, s, &session, Step::Fragment(fragment))
        }
        Command::Ghost(GhostCmd::Set { session, fragment, text, checklist }) => {
            let ghost = Ghost {
                fragment_id: fragment,
                structural_description: text,
                checklist: checklist.checklist(),
            };
            step(e, s, &session, Step::Ghost(ghost))
        }
        Command::Collide(cmd) => match cmd {
            CollideCmd::Score { session, pair, score, rationale } => {
                step(e, s, &session, Step::Score(ScoreInput { pair, score, rationale }))
            }
            CollideCmd::Gate { session } => step(e, s, &session, Step::Gate(NoInput {})),
        },
        Command::Vision(VisionCmd::Add {
            session,
            collision,
            name,
            one_line,
            emotion,
            image,
            why_now,
            novelty,
            feasibility,
            resonance,
            timing,
        }) => {
            let vision = Vision {
                id: String::new(),
                collision_id: String::new(),
                name,
                one_line,
                emotion,
                cinematic_image: image,
                why_now,
                ratings: Ratings::new(novelty, feasibility, resonance, timing),
            };
            step(e, s, &session, Step::Vision(VisionInput { collision, vision }))
        }
        Command::Bridge(BridgeCmd::Set { session, vision, mvv, capabilities, kill_conditions, first_step }) => {
            let bridge = RealityBridge {
                vision_id: vision,
                mvv,
                existing_capabilities: capabilities,
                kill_conditions,
                first_step_24h: first_step,
            };
            step(e, s, &session, Step::Bridge(bridge))
        }
        Command::Signal(SignalCmd::Add {
            session,
            key,
            description,
            evidence,
            strength,
            direction,
            confidence,
            source,
        }) => {
            let signal = Signal {
                key,
                description,
                evidence,
                strength,
                direction,
                confidence,
                source_kind: source,
            };
            step(e, s, &session, Step::Signal(signal))
        }
        Command::Converge(ConvergeCmd::Add { session, signals, hypothesis, causal_logic, confidence, rationale }) => {
            let c = ConvergencePoint {
                id: String::new(),
                signal_keys: signals,
                hypothesis,
                causal_logic,
                confidence,
                confidence_rationale: rationale,
            };
            step(e, s, &session, Step::Convergence(c))
        }
        Command::Contrarian(ContrarianCmd::Set { session, json }) => {
            let view: ContrarianView = serde_json::from_value(json)
                .map_err(|err| ServiceError::BadRequest(format!("contrarian view: {err}")))?;
            step(e, s, &session, Step::Contrarian(view))
        }
        Command::Grid(GridCmd::Eval { axes, readiness, session, label }) => {
            let grid = TimingGrid {
                market_phase: axes.market,
                competitive: axes.competitive,
                readiness,
                external_window: axes.external,
                annotation: axes.annotation,
            };
            match session {
                Some(id) => {
                    let label = label.unwrap_or_default();
                    let out = e.apply(&id, Step::Grid(GridInput { label, grid }), now)?;
                    Ok(Output::Text(out["result"]["display"].as_str().unwrap_or_default().to_string()))
                }
                None => Ok(Output::Text(e.evaluate_grid(&grid).to_string())),
            }
        }
        Command::Action(ActionCmd::Add { session, category, action, trigger, cost }) => {
            let item = ActionItem {
                category,
                action,
                trigger,
                cost_estimate: cost,
            };
            step(e, s, &session, Step::Action(item))
        }
        Command::Integrate(cmd) => match cmd {
            IntegrateCmd::Start { precog, convergences, externals } => {
                let externals = externals
                    .iter()
                    .enumerate()
                    .map(|(i, raw)| {
                        let (tag, text) = raw.split_once('|').ok_or_else(|| {
                            ServiceError::invalid(
                                "invalid_external",
                                format!("external '{raw}' must look like 'domain-tag|text'"),
                                Some(&format!("externals[{i}]")),
                            )
                        })?;
                        Ok(Fragment::new(text.trim(), tag.trim(), SourceKind::Observation))
                    })
                    .collect::<Result<Vec<_>, ServiceError>>()?;
                let req = NewSession::Integration {
                    precog_session_id: precog,
                    convergences,
                    externals,
                };
                e.create_session(req, now).map(Output::Json)
            }
            IntegrateCmd::Map { session, vision, axes, readiness } => {
                let input = MapInput {
                    vision_id: vision,
                    axes: ManualAxes {
                        market_phase: axes.market,
                        competitive: axes.competitive,
                        external_window: axes.external,
                        readiness_override: readiness,
                        annotation: axes.annotation,
                    },
                };
                step(e, s, &session, Step::Map(input))
            }
        },
        Command::History(HistoryCmd::Diff { theme }) => {
            let diff = e.history_diff(&theme)?;
            let mut out = format!(
                "{} → {} ({})\n{:<20} {:<13} {:<9} {:<9} priority\n",
                diff.previous_session, diff.current_session, diff.theme_key, "signal", "class", "prev", "curr"
            );
            let name = |v: Option<protoctl_core::precog::Strength>| {
                v.map(|s| serde_json::to_value(s).expect("enum").as_str().unwrap_or_default().to_string())
                    .unwrap_or_else(|| "-".into())
            };
            for d in &diff.deltas {
                let class = serde_json::to_value(d.classification).expect("enum");
                out.push_str(&format!(
                    "{:<20} {:<13} {:<9} {:<9} {}\n",
                    d.signal_key,
                    class.as_str().unwrap_or_default(),
                    name(d.prev_strength),
                    name(d.curr_strength),
                    if d.priority { "PRIORITY" } else { "" }
                ));
            }
            Ok(Output::Text(out.trim_end().to_string()))
        }
        Command::Predict(cmd) => match cmd {
            PredictCmd::Add { theme, statement, start, end } => {
                let p = PredictionRecord {
                    id: String::new(),
                    theme_key: theme,
                    statement,
                    horizon: DateRange { start, end },
                    outcome: None,
                    timing_accuracy: None,
                    contrarian_value: None,
                };
                e.add_prediction(p, now).map(Output::Json)
            }
            PredictCmd::Eval { id, outcome, timing_accuracy, contrarian_value } => {
                let input = EvaluationInput {
                    outcome,
                    timing_accuracy,
                    contrarian_value,
                };
                let p = e.evaluate_prediction(&id, input, now)?;
                Ok(Output::Json(serde_json::to_value(p).expect("serializable")))
            }
            PredictCmd::Summary { theme } => {
                let summary = e.accuracy(&theme)?;
                Ok(Output::Json(serde_json::to_value(summary).expect("serializable")))
            }
        },
        Command::Score(ScoreCmd::Rubric { target, scores, labels }) => {
            let r = e.score_rubric(RubricInput { target_ref: target, scores, labels }, now)?;
            Ok(Output::Text(format!("{} {}/80", r.id, r.total)))
        }
        Command::Batch(BatchCmd::Run { fixtures }) => {
            let fixture = load_fixture(&fixtures)?;
            let report = e.run_fixture(&fixture, now)?;
            Ok(Output::Text(batch_table(&report)))
        }
        Command::Export { session, format } => {
            let record = e.show(&session)?;
            Ok(Output::Text(export(&record, format)))
        }
        Command::Serve { port } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|err| ServiceError::Storage(err.to_string()))?;
            runtime
                .block_on(crate::http::serve(engine, settings, port))
                .map_err(|err| ServiceError::Storage(format!("{err:#}")))?;
            Ok(Output::Text(String::new()))
        }
        Command::Generate { session, kind, focus } => {
            let client = GeneratorClient::from_settings(s)
                .map_err(|err| ServiceError::invalid("generator_unavailable", err.to_string(), None))?;
            let record = e.show(&session)?;
            let req = GeneratorRequest {
                step_kind: kind,
                context: json!({ "focus": focus, "session": record.payload }),
            };
            let resp = client
                .request(&req)
                .map_err(|err| ServiceError::invalid("generator_failed", err.to_string(), None))?;
            Ok(Output::Text(format!(
                "candidate (not saved; submit it as a step to accept):\n{}",
                resp.candidate_text
            )))
        }
    }
}

fn batch_table(report: &crate::engine::BatchReport) -> String {
    let mut out = format!(
        "{:<3} {:<40} {:>8} {:>9} {:>8} {}\n",
        "#", "pairing", "electric", "hit rate", "visions", "result"
    );
    for (i, r) in report.runs.iter().enumerate() {
        out.push_str(&format!(
            "{:<3} {:<40} {:>8} {:>8.1}% {:>8} {:?}\n",
            i + 1,
            r.pairing_label,
            r.electric_count,
            r.hit_rate().unwrap_or(0.0) * 100.0,
            r.advancing_visions().count(),
            r.result
        ));
    }
    let st = &report.stats;
    out.push_str(&format!(
        "success rate {:.1}% ({}/{}), failure rate {:.1}%\n",
        st.success_rate * 100.0,
        st.success_count,
        st.n_runs,
        st.failure_rate * 100.0
    ));
    if let Some(m) = st.mean_hit_rate_successful {
        out.push_str(&format!("mean Electric rate (successful runs) {:.1}%\n", m * 100.0));
    }
    out.push_str(&format!("mean Electric rate (all runs) {:.1}%\n", st.mean_hit_rate_all * 100.0));
    out.push_str(&format!(
        "visions crystallized {} ({} advancing), per successful run {}\n",
        st.total_visions,
        st.total_advancing_visions,
        st.mean_visions_per_successful
            .map(|m| format!("{m:.2}"))
            .unwrap_or_else(|| "n/a".into())
    ));
    if let Some(r) = st.novelty_feasibility_r {
        out.push_str(&format!("novelty/feasibility r = {r:.3}\n"));
    }
    out.trim_end().to_string()
}

/// Parses `args`, runs the command and writes its output. Returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", err.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", err.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(Output::Json(v)) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&v).expect("serializable"));
            EXIT_OK
        }
        Ok(Output::Text(t)) => {
            if !t.is_empty() {
                let _ = writeln!(stdout, "{t}");
            }
            EXIT_OK
        }
        Err(err) => {
            let field = err.field_path().map(|f| format!(" (field: {f})")).unwrap_or_default();
            let _ = writeln!(stderr, "error[{}]: {}{}", err.code(), err, field);
            if err.is_storage() {
                EXIT_STORAGE
            } else {
                EXIT_VALIDATION
            }
        }
    }
}
