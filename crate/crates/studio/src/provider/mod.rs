//! Provider construction, recording and replay.

mod external;
mod replay;
mod transcript;

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use echo_core::pipeline::{MockProvider, Provider};

pub use external::ExternalProvider;
pub use replay::ReplayProvider;
pub use transcript::{Outcome, RecordingProvider, Transcript, TranscriptError, TranscriptRecord};

use crate::config::{ProviderConfig, ProviderKind};

/// The `--provider` flag: `mock`, `replay:<path>` or `external`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderChoice {
    Mock,
    Replay(PathBuf),
    External,
}

impl FromStr for ProviderChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(ProviderChoice::Mock),
            "external" => Ok(ProviderChoice::External),
            _ => match s.strip_prefix("replay:") {
                Some(path) if !path.is_empty() => Ok(ProviderChoice::Replay(path.into())),
                _ => Err(format!(
                    "expected mock, replay:<path> or external, got {s:?}"
                )),
            },
        }
    }
}

impl ProviderChoice {
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, String> {
        match cfg.kind {
            ProviderKind::Mock => Ok(ProviderChoice::Mock),
            ProviderKind::External => Ok(ProviderChoice::External),
            ProviderKind::Replay => cfg
                .transcript
                .clone()
                .map(ProviderChoice::Replay)
                .ok_or_else(|| "replay provider needs `transcript`".to_string()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderSetupError {
    #[error("mock rules {path}: {message}")]
    MockRules { path: String, message: String },
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("external provider needs an `endpoint` in the provider config")]
    NoEndpoint,
}

/// The mock provider with rules from the config, or the bundled rules.
pub fn mock_provider(cfg: &ProviderConfig) -> Result<MockProvider, ProviderSetupError> {
    match &cfg.mock_rules {
        None => Ok(MockProvider::with_default_rules()),
        Some(path) => {
            let err = |message: String| ProviderSetupError::MockRules {
                path: path.display().to_string(),
                message,
            };
            let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
            MockProvider::from_json(&text).map_err(|e| err(e.to_string()))
        }
    }
}

pub fn build_provider(
    choice: &ProviderChoice,
    cfg: &ProviderConfig,
) -> Result<Arc<dyn Provider>, ProviderSetupError> {
    Ok(match choice {
        ProviderChoice::Mock => Arc::new(mock_provider(cfg)?),
        ProviderChoice::Replay(path) => Arc::new(ReplayProvider::from_file(path)?),
        ProviderChoice::External => {
            let endpoint = cfg.endpoint.clone().ok_or(ProviderSetupError::NoEndpoint)?;
            Arc::new(
                ExternalProvider::new(endpoint, cfg.model.clone(), cfg.api_key(), cfg.timeout())
                    .with_deterministic(cfg.deterministic),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_choice() {
        assert_eq!("mock".parse(), Ok(ProviderChoice::Mock));
        assert_eq!(
            "replay:a/b.jsonl".parse(),
            Ok(ProviderChoice::Replay("a/b.jsonl".into()))
        );
        assert!("replay:".parse::<ProviderChoice>().is_err());
        assert!("gpt".parse::<ProviderChoice>().is_err());
    }
}
