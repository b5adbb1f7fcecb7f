use alloc::string::String;
use serde::{Deserialize, Serialize};

/// A structured warning or error attached to a step, suggestion or session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Index of the offending step, when the diagnostic belongs to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    /// Machine-readable kind, e.g. `unknown_material` or `field_conflict`.
    pub kind: String,
    pub message: String,
    /// The raw text that triggered the diagnostic, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

impl Diagnostic {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            step: None,
            kind: kind.into(),
            message: message.into(),
            raw: None,
        }
    }

    pub fn at_step(mut self, step: usize) -> Self {
        self.step = Some(step);
        self
    }

    pub fn with_raw(mut self, raw: impl Into<String>) -> Self {
        self.raw = Some(raw.into());
        self
    }
}
