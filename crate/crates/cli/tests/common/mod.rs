//! Helpers shared by the cli crate's test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use protoctl::engine::Engine;
use protoctl::http::router;
use protoctl::settings::Settings;
use protoctl_core::fixture::IntegrationScript;
use serde::Serialize;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const FIXED_TIME: &str = "2026-04-02T10:00:00Z";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

pub fn load<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout)
            .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

/// Runs the built binary against `store` with a pinned clock.
pub fn cli<S: AsRef<str>>(store: &Path, args: &[S]) -> CliOutput {
    let out = Command::new(env!("CARGO_BIN_EXE_protoctl"))
        .args(args.iter().map(|a| a.as_ref()))
        .env("PROTOCTL_STORE", store)
        .env("PROTOCTL_FIXED_TIME", FIXED_TIME)
        .env_remove("PROTOCTL_CONFIG")
        .env_remove("PROTOCTL_GENERATOR_URL")
        .output()
        .expect("binary runs");
    CliOutput {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// In-process HTTP client over the router, no socket involved.
pub struct Api {
    router: Router,
    rt: tokio::runtime::Runtime,
}

impl Api {
    pub fn new(store: &Path) -> Self {
        let settings = Settings {
            store: store.to_path_buf(),
            fixed_time: Some(Settings::parse_fixed_time(FIXED_TIME).unwrap()),
            ..Settings::default()
        };
        let engine = Engine::open(store, settings.engine.clone()).unwrap();
        Self {
            router: router(engine, settings),
            rt: tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .unwrap(),
        }
    }

    pub fn raw(&self, method: Method, path: &str, body: &str) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(path)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        self.rt.block_on(async {
            let resp = self.router.clone().oneshot(req).await.unwrap();
            let status = resp.status();
            let bytes = resp.into_body().collect().await.unwrap().to_bytes();
            (status, serde_json::from_slice(&bytes).unwrap())
        })
    }

    pub fn get(&self, path: &str) -> (StatusCode, Value) {
        self.raw(Method::GET, path, "")
    }

    pub fn post(&self, path: &str, body: &Value) -> (StatusCode, Value) {
        self.raw(Method::POST, path, &body.to_string())
    }
}

/// One logical operation expressed for both front ends.
pub struct Call {
    pub cli: Vec<String>,
    pub path: String,
    pub body: Value,
}

fn wire<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .unwrap()
        .as_str()
        .expect("unit enum")
        .replace('_', "-")
}

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

/// The competitive-strategy run as a sequence of calls. Session ids are the
/// ones a fresh ledger allocates.
pub fn competitive_strategy_calls(script: &IntegrationScript) -> Vec<Call> {
    let p = &script.precog;
    let precog = "precog-0001";
    let ghosty = "ghosty-0001";
    let integration = "integration-0001";
    let step = |id: &str, name: &str| format!("/sessions/{id}/steps/{name}");
    let mut calls = vec![Call {
        cli: args(&["session", "new", "--protocol", "precog", "--theme", &p.theme, "--horizon", &p.horizon]),
        path: "/sessions".into(),
        body: json!({ "protocol": "precog", "theme": p.theme, "horizon": p.horizon }),
    }];
    for s in &p.signals {
        let mut a = args(&[
            "signal", "add", "--session", precog, "--key", &s.key, "--description", &s.description,
            "--strength", &wire(&s.strength), "--direction", &wire(&s.direction),
            "--source", &wire(&s.source_kind),
        ]);
        if let Some(c) = &s.confidence {
            a.extend(args(&["--confidence", &wire(c)]));
        }
        for e in &s.evidence {
            a.extend(args(&["--evidence", &format!("{}|{}", e.claim, e.source)]));
        }
        calls.push(Call { cli: a, path: step(precog, "signal"), body: serde_json::to_value(s).unwrap() });
    }
    for c in &p.convergences {
        calls.push(Call {
            cli: args(&[
                "converge", "add", "--session", precog, "--signals", &c.signal_keys.join(","),
                "--hypothesis", &c.hypothesis, "--causal-logic", &c.causal_logic,
                "--confidence", &wire(&c.confidence), "--rationale", &c.confidence_rationale,
            ]),
            path: step(precog, "convergence"),
            body: serde_json::to_value(c).unwrap(),
        });
    }
    let contrarian = serde_json::to_value(&p.contrarian).unwrap();
    calls.push(Call {
        cli: args(&["contrarian", "set", "--session", precog, "--json", &contrarian.to_string()]),
        path: step(precog, "contrarian"),
        body: contrarian,
    });
    let g = &p.grid.grid;
    calls.push(Call {
        cli: args(&[
            "grid", "eval", "--session", precog, "--label", &p.grid.label,
            "--market", &wire(&g.market_phase), "--competitive", &wire(&g.competitive),
            "--readiness", &wire(&g.readiness), "--external", &wire(&g.external_window),
            "--annotation", &g.annotation,
        ]),
        path: step(precog, "grid"),
        body: serde_json::to_value(&p.grid).unwrap(),
    });
    for a in &p.actions {
        calls.push(Call {
            cli: args(&[
                "action", "add", "--session", precog, "--category", &wire(&a.category),
                "--action", &a.action, "--trigger", &a.trigger, "--cost", &a.cost_estimate,
            ]),
            path: step(precog, "action"),
            body: serde_json::to_value(a).unwrap(),
        });
    }
    calls.push(Call {
        cli: args(&["session", "finalize", precog]),
        path: step(precog, "finalize"),
        body: Value::Null,
    });

    let mut start = args(&["integrate", "start", "--precog", precog]);
    for c in &script.selection {
        start.extend(args(&["--convergence", c]));
    }
    for x in &script.externals {
        start.extend(args(&["--external", &format!("{}|{}", x.domain_tag, x.text)]));
    }
    calls.push(Call {
        cli: start,
        path: "/sessions".into(),
        body: json!({
            "protocol": "integration",
            "precog_session_id": precog,
            "convergences": script.selection,
            "externals": script.external_fragments(),
        }),
    });
    for (id, text) in &script.ghosts {
        calls.push(Call {
            cli: args(&["ghost", "set", "--session", ghosty, "--fragment", id, "--text", text, "--checklist-all"]),
            path: step(ghosty, "ghost"),
            body: json!({
                "fragment_id": id,
                "structural_description": text,
                "checklist": protoctl_core::collider::GhostChecklist::all(),
            }),
        });
    }
    for s in &script.scores {
        calls.push(Call {
            cli: args(&[
                "collide", "score", "--session", ghosty, "--pair", &s.pair,
                "--score", &wire(&s.score), "--rationale", &s.rationale,
            ]),
            path: step(ghosty, "score"),
            body: json!({ "pair": s.pair, "score": s.score, "rationale": s.rationale }),
        });
    }
    calls.push(Call {
        cli: args(&["collide", "gate", "--session", ghosty]),
        path: step(ghosty, "gate"),
        body: Value::Null,
    });
    for v in &script.visions {
        let r = v.vision.ratings;
        let mut body = serde_json::to_value(&v.vision).unwrap();
        body["collision"] = json!(v.collision);
        calls.push(Call {
            cli: args(&[
                "vision", "add", "--session", ghosty, "--collision", &v.collision,
                "--name", &v.vision.name, "--one-line", &v.vision.one_line,
                "--emotion", &v.vision.emotion, "--image", &v.vision.cinematic_image,
                "--why-now", &v.vision.why_now,
                "--novelty", &r.novelty.to_string(), "--feasibility", &r.feasibility.to_string(),
                "--resonance", &r.resonance.to_string(), "--timing", &r.timing.to_string(),
            ]),
            path: step(ghosty, "vision"),
            body,
        });
    }
    for (i, v) in script.visions.iter().enumerate() {
        let vision_id = format!("v{}", i + 1);
        let b = &v.bridge;
        let mut a = args(&["bridge", "set", "--session", ghosty, "--vision", &vision_id, "--mvv", &b.mvv, "--first-step", &b.first_step_24h]);
        for c in &b.existing_capabilities {
            a.extend(args(&["--capability", c]));
        }
        for k in &b.kill_conditions {
            a.extend(args(&["--kill", k]));
        }
        let mut body = serde_json::to_value(b).unwrap();
        body["vision_id"] = json!(vision_id);
        calls.push(Call { cli: a, path: step(ghosty, "bridge"), body });
    }
    calls.push(Call {
        cli: args(&["session", "complete", ghosty]),
        path: step(ghosty, "complete"),
        body: Value::Null,
    });
    for (i, m) in script.mappings.iter().enumerate() {
        let vision_id = format!("v{}", i + 1);
        let mut a = args(&[
            "integrate", "map", "--session", integration, "--vision", &vision_id,
            "--market", &wire(&m.market_phase), "--competitive", &wire(&m.competitive),
            "--external", &wire(&m.external_window),
        ]);
        let mut body = json!({
            "vision_id": vision_id,
            "market_phase": m.market_phase,
            "competitive": m.competitive,
            "external_window": m.external_window,
        });
        if let Some(r) = m.readiness_override {
            a.extend(args(&["--readiness", &wire(&r)]));
            body["readiness_override"] = json!(r);
        }
        calls.push(Call { cli: a, path: step(integration, "map"), body });
    }
    calls
}

/// Replays the calls through the binary; panics naming the first failure.
pub fn replay_cli(store: &Path, calls: &[Call]) -> Vec<CliOutput> {
    calls
        .iter()
        .map(|c| {
            let out = cli(store, &c.cli);
            assert_eq!(out.code, 0, "{:?}: {}", c.cli, out.stderr);
            out
        })
        .collect()
}

/// Replays the calls over HTTP; panics naming the first failure.
pub fn replay_http(api: &Api, calls: &[Call]) -> Vec<Value> {
    calls
        .iter()
        .map(|c| {
            let body = if c.body.is_null() { String::new() } else { c.body.to_string() };
            let (status, v) = api.raw(Method::POST, &c.path, &body);
            assert!(status.is_success(), "{} {}: {v}", c.path, status);
            v
        })
        .collect()
}
