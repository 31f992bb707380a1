//! Client for an optional external text generator.
//!
//! Candidates are only ever shown to the operator. Nothing returned here is
//! written to a session until the operator submits it as an ordinary step.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::settings::Settings;

const EXCERPT_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Ghost,
    CollisionRationale,
    Vision,
    Bridge,
    Signal,
    Contrarian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRequest {
    pub step_kind: StepKind,
    /// Excerpt of the session the candidate is for.
    pub context: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorResponse {
    pub candidate_text: String,
    #[serde(default)]
    pub metadata: Value,
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("no generator endpoint configured; enter the text manually")]
    Unconfigured,
    #[error("generator did not answer within {0:?}")]
    Timeout(Duration),
    #[error("generator returned {status}: {excerpt}")]
    RemoteError { status: u16, excerpt: String },
    #[error("generator unreachable: {0}")]
    Transport(String),
    #[error("generator response unreadable: {0}")]
    InvalidResponse(String),
}

#[derive(Debug, Clone)]
pub struct GeneratorClient {
    url: String,
    timeout: Duration,
    http: reqwest::blocking::Client,
}

impl GeneratorClient {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, GeneratorError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GeneratorError::Transport(e.to_string()))?;
        Ok(Self {
            url: url.into(),
            timeout,
            http,
        })
    }

    pub fn from_settings(settings: &Settings) -> Result<Self, GeneratorError> {
        let url = settings
            .generator_url
            .as_deref()
            .filter(|u| !u.trim().is_empty())
            .ok_or(GeneratorError::Unconfigured)?;
        Self::new(url, settings.generator_timeout)
    }

    pub fn request(&self, req: &GeneratorRequest) -> Result<GeneratorResponse, GeneratorError> {
        let resp = self.http.post(&self.url).json(req).send().map_err(|e| {
            if e.is_timeout() {
                GeneratorError::Timeout(self.timeout)
            } else {
                GeneratorError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let body = resp.text().map_err(|e| {
            if e.is_timeout() {
                GeneratorError::Timeout(self.timeout)
            } else {
                GeneratorError::Transport(e.to_string())
            }
        })?;
        if status.as_u16() >= 400 {
            return Err(GeneratorError::RemoteError {
                status: status.as_u16(),
                excerpt: body.chars().take(EXCERPT_LIMIT).collect(),
            });
        }
        serde_json::from_str(&body).map_err(|e| GeneratorError::InvalidResponse(e.to_string()))
    }
}
