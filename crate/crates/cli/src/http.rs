//! JSON-over-HTTP session API.
//!
//! Every response is an envelope: `{"ok": true, "data": ...}` or
//! `{"ok": false, "error": {"code", "message", "field_path"}}`.

use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use protoctl_core::ledger::PredictionRecord;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::engine::{Engine, EvaluationInput, NewSession, RubricInput, Step};
use crate::error::ServiceError;
use crate::settings::Settings;

pub struct AppState {
    /// All ledger writes funnel through this lock, which also serializes
    /// concurrent requests on the same session.
    pub engine: Mutex<Engine>,
    pub settings: Settings,
}

type Shared = Arc<AppState>;

pub fn router(engine: Engine, settings: Settings) -> Router {
    let state = Arc::new(AppState {
        engine: Mutex::new(engine),
        settings,
    });
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(show_session))
        .route("/sessions/:id/steps/:step", post(submit_step))
        .route("/sessions/:id/gates", get(gates))
        .route("/themes/:key/history/diff", get(history_diff))
        .route("/predictions", post(add_prediction))
        .route("/predictions/:id/evaluation", post(evaluate_prediction))
        .route("/rubric", post(rubric))
        .with_state(state)
}

pub async fn serve(engine: Engine, settings: Settings, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind port {port}: {e}"))?;
    tracing::info!(port, "serving session API");
    axum::serve(listener, router(engine, settings)).await?;
    Ok(())
}

fn ok(status: StatusCode, data: Value) -> Response {
    (status, Json(json!({ "ok": true, "data": data }))).into_response()
}

fn fail(e: ServiceError) -> Response {
    let status = match &e {
        ServiceError::Validation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
        ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
        ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, Json(json!({ "ok": false, "error": e.body() }))).into_response()
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

fn parse_value(body: &Bytes) -> Result<Value, ServiceError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(Value::Null)
    } else {
        parse(body)
    }
}

fn with_engine<T>(
    state: &AppState,
    f: impl FnOnce(&mut Engine, &Settings) -> Result<T, ServiceError>,
) -> Result<T, ServiceError> {
    let mut engine = state
        .engine
        .lock()
        .map_err(|_| ServiceError::Storage("engine lock poisoned".into()))?;
    f(&mut engine, &state.settings)
}

fn respond<T: serde::Serialize>(status: StatusCode, r: Result<T, ServiceError>) -> Response {
    match r {
        Ok(v) => ok(status, serde_json::to_value(v).expect("serializable")),
        Err(e) => fail(e),
    }
}

async fn health() -> Response {
    ok(StatusCode::OK, json!({ "status": "up" }))
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> Response {
    let r = parse::<NewSession>(&body)
        .and_then(|req| with_engine(&state, |e, s| e.create_session(req, s.now())));
    respond(StatusCode::CREATED, r)
}

async fn show_session(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    respond(StatusCode::OK, with_engine(&state, |e, _| e.show(&id)))
}

async fn submit_step(
    State(state): State<Shared>,
    Path((id, step)): Path<(String, String)>,
    body: Bytes,
) -> Response {
    let r = parse_value(&body)
        .and_then(|v| Step::from_parts(&step, v))
        .and_then(|step| with_engine(&state, |e, s| e.apply(&id, step, s.now())));
    respond(StatusCode::OK, r)
}

async fn gates(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    respond(StatusCode::OK, with_engine(&state, |e, _| e.gates(&id)))
}

async fn history_diff(State(state): State<Shared>, Path(key): Path<String>) -> Response {
    respond(StatusCode::OK, with_engine(&state, |e, _| e.history_diff(&key)))
}

async fn add_prediction(State(state): State<Shared>, body: Bytes) -> Response {
    let r = parse::<PredictionRecord>(&body)
        .and_then(|p| with_engine(&state, |e, s| e.add_prediction(p, s.now())));
    respond(StatusCode::CREATED, r)
}

async fn evaluate_prediction(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Response {
    let r = parse::<EvaluationInput>(&body)
        .and_then(|input| with_engine(&state, |e, s| e.evaluate_prediction(&id, input, s.now())));
    respond(StatusCode::OK, r)
}

async fn rubric(State(state): State<Shared>, body: Bytes) -> Response {
    let r = parse::<RubricInput>(&body)
        .and_then(|input| with_engine(&state, |e, s| e.score_rubric(input, s.now())));
    respond(StatusCode::CREATED, r)
}
