use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use chrono::{DateTime, Utc};
use protoctl_core::config::EngineConfig;
use protoctl_core::Timestamp;

pub const DEFAULT_STORE: &str = "protoctl-ledger.ndjson";
pub const DEFAULT_GENERATOR_TIMEOUT: Duration = Duration::from_secs(30);

/// Runtime settings shared by the CLI and the HTTP server.
#[derive(Debug, Clone)]
pub struct Settings {
    pub store: PathBuf,
    pub engine: EngineConfig,
    pub generator_url: Option<String>,
    pub generator_timeout: Duration,
    /// When set, every step is stamped with this instant instead of the
    /// wall clock. Makes ledgers reproducible across runs.
    pub fixed_time: Option<Timestamp>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            store: PathBuf::from(DEFAULT_STORE),
            engine: EngineConfig::default(),
            generator_url: None,
            generator_timeout: DEFAULT_GENERATOR_TIMEOUT,
            fixed_time: None,
        }
    }
}

impl Settings {
    pub fn now(&self) -> Timestamp {
        self.fixed_time.unwrap_or_else(Utc::now)
    }

    /// Reads the threshold config file (TOML). Missing keys keep defaults.
    pub fn load_engine_config(path: &Path) -> anyhow::Result<EngineConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse_fixed_time(raw: &str) -> anyhow::Result<Timestamp> {
        Ok(DateTime::parse_from_rfc3339(raw)
            .with_context(|| format!("fixed time '{raw}' is not RFC 3339"))?
            .with_timezone(&Utc))
    }
}
