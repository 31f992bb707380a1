mod common;

use axum::http::{Method, StatusCode};
use common::Api;
use serde_json::{json, Value};

fn api() -> (tempfile::TempDir, Api) {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(&dir.path().join("l.ndjson"));
    (dir, api)
}

fn fragment(text: &str, tag: &str) -> Value {
    json!({ "text": text, "domain_tag": tag, "source_kind": "observation" })
}

/// Ghosty session with three fragments from different domains, past the
/// harvest and with every fragment ghosted.
fn ghosted(api: &Api) -> String {
    let (status, v) = api.post(
        "/sessions",
        &json!({
            "protocol": "ghosty",
            "theme": "weekend",
            "fragments": [
                fragment("a choir warming up", "music"),
                fragment("a bond auction", "finance"),
                fragment("a tide pool at dusk", "biology"),
            ],
        }),
    );
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let id = v["data"]["session_id"].as_str().unwrap().to_string();
    for f in ["f1", "f2", "f3"] {
        let (status, v) = api.post(
            &format!("/sessions/{id}/steps/ghost"),
            &json!({
                "fragment_id": f,
                "structural_description": "many small voices tuning toward one pitch under pressure",
                "checklist": { "uses_verbs": true, "includes_emotion": true, "cross_domain_comprehensible": true, "reversibility_pass": true },
            }),
        );
        assert_eq!(status, StatusCode::OK, "{v}");
    }
    id
}

#[test]
fn health_answers() {
    let (_d, api) = api();
    let (status, v) = api.get("/health");
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!({ "ok": true, "data": { "status": "up" } }));
}

#[test]
fn out_of_range_rating_is_reported_with_its_field_path() {
    let (_d, api) = api();
    let id = ghosted(&api);
    for (pair, score) in [("f1:f2", "electric"), ("f1:f3", "boring"), ("f2:f3", "interesting")] {
        let (status, _) = api.post(
            &format!("/sessions/{id}/steps/score"),
            &json!({ "pair": pair, "score": score, "rationale": "r" }),
        );
        assert_eq!(status, StatusCode::OK);
    }
    let (status, _) = api.raw(Method::POST, &format!("/sessions/{id}/steps/gate"), "");
    assert_eq!(status, StatusCode::OK);

    let vision = |novelty: u8| {
        json!({
            "collision": "f1:f2",
            "name": "Pitch Market",
            "one_line": "auctions tuned like choirs",
            "emotion": "relief",
            "cinematic_image": "traders humming",
            "why_now": "rates are noisy",
            "ratings": { "novelty": novelty, "feasibility": 3, "resonance": 3, "timing": 3 },
        })
    };
    let (status, v) = api.post(&format!("/sessions/{id}/steps/vision"), &vision(6));
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["ok"], false);
    assert_eq!(v["error"]["field_path"], "ratings.novelty");

    let (status, v) = api.post(&format!("/sessions/{id}/steps/vision"), &vision(3));
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["data"]["result"]["advances"], true);

    let (status, v) = api.get(&format!("/sessions/{id}/gates"));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["data"]["visions"][0]["advances"], true);
}

#[test]
fn malformed_bodies_are_bad_requests() {
    let (_d, api) = api();
    let (status, v) = api.raw(Method::POST, "/sessions", "{not json");
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "bad_request");

    let id = ghosted(&api);
    let (status, v) = api.post(&format!("/sessions/{id}/steps/teleport"), &json!({}));
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["ok"], false);

    let (status, _) = api.post(&format!("/sessions/{id}/steps/score"), &json!({ "pair": "f1:f2" }));
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[test]
fn unknown_sessions_are_not_found() {
    let (_d, api) = api();
    let (status, v) = api.get("/sessions/ghosty-0042");
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_session");
    let (status, _) = api.raw(Method::POST, "/sessions/ghosty-0042/steps/gate", "");
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn homogeneous_harvest_aborts_and_is_recorded() {
    let (_d, api) = api();
    let (_, v) = api.post(
        "/sessions",
        &json!({
            "protocol": "ghosty",
            "theme": "freight",
            "fragments": [
                fragment("pallets", "logistics"),
                fragment("cranes", "Logistics"),
                fragment("customs", " logistics "),
            ],
        }),
    );
    let id = v["data"]["session_id"].as_str().unwrap().to_string();
    let (status, v) = api.raw(Method::POST, &format!("/sessions/{id}/steps/harvest"), "");
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert_eq!(v["error"]["code"], "homogeneous_fragments");
    let (_, v) = api.get(&format!("/sessions/{id}"));
    assert_eq!(v["data"]["payload"]["status"], "aborted_preflight");
    assert!(v["data"]["payload"]["ghosts"].as_array().is_none_or(|g| g.is_empty()));
}

#[test]
fn ghost_before_enough_fragments_is_rejected() {
    let (_d, api) = api();
    let (_, v) = api.post(
        "/sessions",
        &json!({ "protocol": "ghosty", "theme": "t", "fragments": [fragment("a", "x"), fragment("b", "y")] }),
    );
    let id = v["data"]["session_id"].as_str().unwrap().to_string();
    let (status, v) = api.post(
        &format!("/sessions/{id}/steps/ghost"),
        &json!({ "fragment_id": "f1", "structural_description": "x", "checklist": { "uses_verbs": true, "includes_emotion": true, "cross_domain_comprehensible": true, "reversibility_pass": true } }),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert_eq!(v["error"]["code"], "count_out_of_range");
}

#[test]
fn predictions_and_rubric_round_trip() {
    let (_d, api) = api();
    let (status, v) = api.post(
        "/predictions",
        &json!({
            "theme_key": "ai-agents",
            "statement": "agent marketplaces consolidate",
            "horizon": { "start": "2026-01-01", "end": "2026-12-31" },
        }),
    );
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let id = v["data"]["prediction_id"].as_str().unwrap().to_string();
    let path = format!("/predictions/{id}/evaluation");
    let (status, v) = api.post(&path, &json!({ "outcome": "partial" }));
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["data"]["outcome"], "partial");
    let (status, v) = api.post(&path, &json!({ "outcome": "hit" }));
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "already_evaluated");

    let (status, v) = api.post(
        "/rubric",
        &json!({ "target_ref": "ghosty-0001", "scores": [10, 9, 9, 10, 9, 9, 9, 9] }),
    );
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["data"]["total"], 74);
    assert_eq!(v["data"]["id"], "rubric-0001");

    let (status, v) = api.post("/rubric", &json!({ "target_ref": "x", "scores": [1, 2, 11, 0, 0, 0, 0, 0] }));
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["field_path"], "dimension_scores[2]");
}

#[test]
fn history_diff_needs_two_sessions() {
    let (_d, api) = api();
    let (status, v) = api.get("/themes/ai-agents/history/diff");
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "insufficient_history");
}
