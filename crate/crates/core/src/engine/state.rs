use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::action::{InversePatch, PlannedStep};
use crate::diag::Diagnostic;
use crate::pipeline::PipelineConfig;

/// Lifecycle of one suggestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionState {
    /// Actions are being generated; the entry can be read but not applied.
    Processing,
    /// Actions are ready to apply.
    Pending,
    /// Actions are in the scene and the inverse patch is held.
    Applied,
    /// Generation or application failed; regenerate to retry.
    Failed,
}

impl SuggestionState {
    pub fn name(&self) -> &'static str {
        match self {
            SuggestionState::Processing => "processing",
            SuggestionState::Pending => "pending",
            SuggestionState::Applied => "applied",
            SuggestionState::Failed => "failed",
        }
    }

    pub fn can_transition(self, to: SuggestionState) -> bool {
        use SuggestionState::*;
        matches!(
            (self, to),
            (Processing, Pending)
                | (Processing, Failed)
                | (Pending, Applied)
                | (Applied, Pending)
                | (Pending, Processing)
                | (Applied, Processing)
                | (Failed, Processing)
                | (Pending, Failed)
        )
    }
}

impl fmt::Display for SuggestionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionEntry {
    pub suggestion_id: String,
    pub text: String,
    pub origin_instruction: String,
    state: SuggestionState,
    /// Planned steps; empty while processing.
    pub steps: Vec<PlannedStep>,
    /// Held exactly while applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<InversePatch>,
    pub diagnostics: Vec<Diagnostic>,
    /// Starts at 1 and grows with every regenerate.
    pub generation: u32,
}

impl SuggestionEntry {
    pub(crate) fn new(suggestion_id: String, text: String, origin_instruction: String) -> Self {
        Self {
            suggestion_id,
            text,
            origin_instruction,
            state: SuggestionState::Processing,
            steps: Vec::new(),
            patch: None,
            diagnostics: Vec::new(),
            generation: 1,
        }
    }

    pub fn state(&self) -> SuggestionState {
        self.state
    }

    /// The only way the state changes; refuses anything outside the
    /// lifecycle.
    pub(crate) fn transition(
        &mut self,
        to: SuggestionState,
        operation: &'static str,
    ) -> Result<(), EngineError> {
        if !self.state.can_transition(to) {
            return Err(self.wrong_state(operation));
        }
        self.state = to;
        Ok(())
    }

    pub(crate) fn wrong_state(&self, operation: &'static str) -> EngineError {
        EngineError::WrongState {
            suggestion_id: self.suggestion_id.clone(),
            state: self.state,
            operation,
        }
    }

    pub(crate) fn check_invariants(&self) -> bool {
        (self.patch.is_some() == (self.state == SuggestionState::Applied))
            && (self.state != SuggestionState::Pending || !self.steps.is_empty())
    }
}

/// All suggestions produced for one instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub scene_id: String,
    pub instruction: String,
    pub entries: Vec<SuggestionEntry>,
    pub config: PipelineConfig,
    pub created_at: u64,
    /// Session-level problems, e.g. a failed suggestion request.
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

impl Session {
    pub fn entry(&self, suggestion_id: &str) -> Option<&SuggestionEntry> {
        self.entries
            .iter()
            .find(|e| e.suggestion_id == suggestion_id)
    }

    pub(crate) fn entry_mut(
        &mut self,
        suggestion_id: &str,
    ) -> Result<&mut SuggestionEntry, EngineError> {
        self.entries
            .iter_mut()
            .find(|e| e.suggestion_id == suggestion_id)
            .ok_or_else(|| EngineError::UnknownSuggestion(suggestion_id.into()))
    }

    /// True while any entry is still generating.
    pub fn is_processing(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.state == SuggestionState::Processing)
    }
}
