//! `service.toml` and `provider.toml`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

/// Environment variable that overrides `api_key` in the provider config.
pub const PROVIDER_KEY_ENV: &str = "ECHO_PROVIDER_KEY";

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let err = |message: String| ConfigError {
        path: path.display().to_string(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    toml::from_str(&text).map_err(|e| err(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Relative paths resolve against the service config's directory.
    #[serde(default)]
    pub provider_config: Option<PathBuf>,
    /// Catalog JSON; the bundled fixture catalog when absent.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    /// Extra latency before every background action generation, whatever
    /// the provider, so the processing state is observable by pollers.
    #[serde(default)]
    pub mock_delay_ms: u64,
    /// Required in `X-Admin-Token` by `POST /assets/label` when set.
    #[serde(default)]
    pub admin_token: Option<String>,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_data_dir() -> PathBuf {
    "data".into()
}

impl Default for ServiceConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.provider_config, &mut cfg.catalog]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.data_dir.is_relative() {
            cfg.data_dir = base.join(&cfg.data_dir);
        }
        cfg.bind
            .parse::<std::net::SocketAddr>()
            .map_err(|e| ConfigError {
                path: path.display().to_string(),
                message: format!("bind {:?}: {e}", cfg.bind),
            })?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Replay,
    External,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(default)]
    pub kind: ProviderKind,
    /// Mock rule table; the bundled rules when absent.
    #[serde(default)]
    pub mock_rules: Option<PathBuf>,
    #[serde(default)]
    pub transcript: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "yes")]
    pub deterministic: bool,
}

fn default_model() -> String {
    "gpt-4o".into()
}

fn default_timeout() -> u64 {
    60
}

fn yes() -> bool {
    true
}

impl Default for ProviderConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl ProviderConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.mock_rules, &mut cfg.transcript]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// The configured key, with the environment taking precedence.
    pub fn api_key(&self) -> Option<String> {
        std::env::var(PROVIDER_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .or_else(|| self.api_key.clone())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs.max(1))
    }
}
