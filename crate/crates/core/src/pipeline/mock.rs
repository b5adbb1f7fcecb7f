use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{PromptBundle, Provider, ProviderError, Stage};

/// Returned when no rule matches.
pub const MOCK_FALLBACK: &str = "{\"suggestions\":[]}";

/// Rule table shipped with the crate; covers the study instructions.
pub const DEFAULT_MOCK_RULES: &str = include_str!("../../fixtures/mock_rules.json");

/// `response` is returned for requests of `stage` whose subject contains every
/// keyword (case-insensitive). `{{subject}}` in the response is replaced by
/// the request subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    pub stage: Stage,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub response: String,
}

impl MockRule {
    fn matches(&self, request: &PromptBundle) -> bool {
        if self.stage != request.stage {
            return false;
        }
        let subject = request.subject.to_lowercase();
        self.keywords
            .iter()
            .all(|k| subject.contains(k.to_lowercase().as_str()))
    }
}

/// Deterministic provider driven by a rule table; first matching rule wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockProvider {
    rules: Vec<MockRule>,
}

impl MockProvider {
    pub fn new(rules: Vec<MockRule>) -> Self {
        Self { rules }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    /// The built-in table.
    pub fn with_default_rules() -> Self {
        Self::from_json(DEFAULT_MOCK_RULES).expect("bundled mock rules parse")
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }

    pub fn respond(&self, request: &PromptBundle) -> String {
        match self.rules.iter().find(|r| r.matches(request)) {
            Some(rule) => rule.response.replace("{{subject}}", &request.subject),
            None => MOCK_FALLBACK.to_string(),
        }
    }
}

impl Provider for MockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError> {
        Ok(self.respond(request))
    }
}
