//! Session reports: a readable markdown trace, or the canonical payload.

use std::fmt::Write;

use protoctl_core::collider::ColliderSession;
use protoctl_core::integration::IntegrationRun;
use protoctl_core::ledger::{Payload, PredictionRecord, RubricScore, SessionRecord};
use protoctl_core::precog::PrecogSession;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Data,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(Self::Markdown),
            "data" | "json" => Ok(Self::Data),
            other => Err(format!("unknown export format '{other}' (md|data)")),
        }
    }
}

pub fn export(record: &SessionRecord, format: Format) -> String {
    match format {
        Format::Data => record.payload_json(),
        Format::Markdown => markdown(record),
    }
}

/// snake_case wire name of an enum value.
fn name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

pub fn markdown(record: &SessionRecord) -> String {
    let mut out = String::new();
    match &record.payload {
        Payload::Collider(s) => collider_md(&mut out, s),
        Payload::Precog(s) => precog_md(&mut out, s),
        Payload::Integration(r) => integration_md(&mut out, r),
        Payload::Prediction(p) => prediction_md(&mut out, p),
        Payload::Rubric(r) => rubric_md(&mut out, r),
    }
    let _ = writeln!(out, "\n_Record {} at {}_", record.record_id, record.created_at.to_rfc3339());
    out
}

fn collider_md(out: &mut String, s: &ColliderSession) {
    let _ = writeln!(out, "# Collider session {}\n", s.id);
    let _ = writeln!(out, "Theme: {}  \nStatus: {}\n", s.theme, s.status);
    let _ = writeln!(out, "## 1. Fragments\n");
    for f in &s.fragments {
        let conf = f.confidence.map(|c| format!(" [{}]", name(&c))).unwrap_or_default();
        let _ = writeln!(
            out,
            "- **{}** ({}, {}){}: {}",
            f.id,
            f.domain_tag,
            name(&f.source_kind),
            conf,
            f.text
        );
    }
    if !s.ghosts.is_empty() {
        let _ = writeln!(out, "\n## 2. Ghosts\n");
        for g in &s.ghosts {
            let flag = match name(&g.shallow_warning).as_str() {
                "warn" => " _(shallow ghost warning)_",
                _ => "",
            };
            let _ = writeln!(
                out,
                "- **{}**: {}{}",
                g.ghost.fragment_id, g.ghost.structural_description, flag
            );
        }
    }
    if !s.collisions.is_empty() {
        let _ = writeln!(out, "\n## 3. Collision matrix\n");
        let _ = writeln!(out, "| Pair | Score | Rationale |\n|---|---|---|");
        for c in &s.collisions {
            let _ = writeln!(out, "| {} | {} | {} |", c.id(), name(&c.score), c.rationale);
        }
        let electric = s.electric_ids();
        let _ = writeln!(out, "\nElectric: {}", if electric.is_empty() { "none".to_string() } else { electric.join(", ") });
        if let Some(g) = &s.gate {
            if g.electric_inflation {
                let _ = writeln!(out, "\n> Electric inflation: every pair was scored Electric.");
            } else if g.inflation_advisory {
                let _ = writeln!(out, "\n> Advisory: the Electric share is unusually high.");
            }
        }
    }
    if !s.visions.is_empty() {
        let _ = writeln!(out, "\n## 4. Visions\n");
        for v in &s.visions {
            let r = v.vision.ratings;
            let _ = writeln!(
                out,
                "### {} {} (from {})\n\n{}\n\n- Emotion: {}\n- Image: {}\n- Why now: {}\n- Ratings: novelty {}, feasibility {}, resonance {}, timing {}\n- Gate: {}\n",
                v.vision.id,
                v.vision.name,
                v.vision.collision_id,
                v.vision.one_line,
                v.vision.emotion,
                v.vision.cinematic_image,
                v.vision.why_now,
                r.novelty,
                r.feasibility,
                r.resonance,
                r.timing,
                if v.advances { "advances" } else { "rejected (a rating below 3)" }
            );
        }
    }
    if !s.bridges.is_empty() {
        let _ = writeln!(out, "## 5. Reality bridges\n");
        for b in &s.bridges {
            let _ = writeln!(out, "### {}\n\n- MVV: {}\n- First step (24h): {}", b.vision_id, b.mvv, b.first_step_24h);
            if !b.existing_capabilities.is_empty() {
                let _ = writeln!(out, "- Capabilities: {}", b.existing_capabilities.join("; "));
            }
            for k in &b.kill_conditions {
                let _ = writeln!(out, "- Kill if: {k}");
            }
            let _ = writeln!(out);
        }
    }
    if let Some(reason) = &s.abort_reason {
        let _ = writeln!(out, "\n**Aborted ({}):** {}", s.status, reason);
    }
}

fn precog_md(out: &mut String, s: &PrecogSession) {
    let _ = writeln!(out, "# PRECOG session {}\n", s.id);
    let _ = writeln!(out, "Theme: {}  \nHorizon: {}  \nStatus: {}\n", s.theme_key, s.horizon, s.status);
    let _ = writeln!(out, "## 1. Signal map\n");
    let _ = writeln!(out, "| Key | Signal | Strength | Direction | Confidence |\n|---|---|---|---|---|");
    for sig in &s.signals {
        let conf = sig.confidence.map(|c| name(&c)).unwrap_or_default();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            sig.key,
            sig.description,
            name(&sig.strength),
            name(&sig.direction),
            conf
        );
    }
    if !s.convergences.is_empty() {
        let _ = writeln!(out, "\n## 2. Convergence points\n");
        for c in &s.convergences {
            let cv = &c.convergence;
            let _ = writeln!(
                out,
                "- **{}** ({}; confidence {}): {} {}",
                cv.id,
                cv.signal_keys.join(" + "),
                name(&cv.confidence),
                cv.hypothesis,
                cv.causal_logic
            );
            if let Some(a) = &c.hypothesis_advisory {
                let _ = writeln!(out, "  - advisory: {a}");
            }
        }
    }
    if let Some(view) = &s.contrarian {
        let _ = writeln!(out, "\n## 3. Contrarian view\n\n{}\n", view.overestimation_reason);
        for (i, sc) in view.scenarios.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}. {} ({:.0}–{:.0}%). Analogy: {}. Trigger: {}.",
                i + 1,
                sc.description,
                sc.probability_low * 100.0,
                sc.probability_high * 100.0,
                sc.historical_analogy,
                sc.collapse_trigger
            );
        }
    }
    if !s.grid_evaluations.is_empty() {
        let _ = writeln!(out, "\n## 4. Timing grid\n");
        let _ = writeln!(out, "| Label | Market | Competitive | Readiness | External | Overall |\n|---|---|---|---|---|---|");
        for g in &s.grid_evaluations {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                g.label,
                name(&g.grid.market_phase),
                name(&g.grid.competitive),
                name(&g.grid.readiness),
                name(&g.grid.external_window),
                g.judgment
            );
        }
        if s.escalation_required() {
            let _ = writeln!(out, "\n> All four axes align: an escalated contrarian view is required.");
        }
    }
    if !s.actions.is_empty() {
        let _ = writeln!(out, "\n## 5. Action window\n");
        for a in &s.actions {
            let _ = writeln!(
                out,
                "- [{}] {} (trigger: {}; cost: {})",
                name(&a.category),
                a.action,
                a.trigger,
                a.cost_estimate
            );
        }
    }
}

fn integration_md(out: &mut String, r: &IntegrationRun) {
    let _ = writeln!(out, "# Integration run {}\n", r.id);
    let _ = writeln!(
        out,
        "PRECOG session: {}  \nCollider session: {}  \nConvergences: {}\n",
        r.precog_session_id,
        r.collider_session_id,
        r.selected_convergences.join(", ")
    );
    for m in &r.mappings {
        let _ = writeln!(out, "## {} ({})\n\n{}\n", m.label, m.vision_id, m.judgment);
        for a in &m.actions {
            let _ = writeln!(out, "- [{}] {} (trigger: {})", name(&a.category), a.action, a.trigger);
        }
        let _ = writeln!(out);
    }
}

fn prediction_md(out: &mut String, p: &PredictionRecord) {
    let _ = writeln!(out, "# Prediction {}\n", p.id);
    let _ = writeln!(out, "{}\n\nTheme: {}  \nWindow: {} to {}", p.statement, p.theme_key, p.horizon.start, p.horizon.end);
    let outcome = p.outcome.map(|o| name(&o)).unwrap_or_else(|| "pending".into());
    let _ = writeln!(out, "Outcome: {outcome}");
}

fn rubric_md(out: &mut String, r: &RubricScore) {
    let _ = writeln!(out, "# Rubric {} for {}\n", r.id, r.target_ref);
    for (label, score) in r.dimension_labels.iter().zip(&r.dimension_scores) {
        let _ = writeln!(out, "- {label}: {score}/10");
    }
    let _ = writeln!(out, "\nTotal: {}/80", r.total);
}
