use std::path::Path;
use std::sync::Mutex;

use echo_core::pipeline::{PromptBundle, Provider, ProviderError};

use super::transcript::{Outcome, Transcript, TranscriptError, TranscriptRecord};

/// Serves recorded outcomes in their original order. Each request must be of
/// the stage that was recorded next. The provider stands in for the one that
/// was recorded and reports its id, so replayed sessions match byte for byte.
pub struct ReplayProvider {
    id: String,
    records: Vec<TranscriptRecord>,
    cursor: Mutex<usize>,
}

impl ReplayProvider {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        let id = records
            .first()
            .map_or_else(|| "replay".to_string(), |r| r.provider_id.clone());
        Self {
            id,
            records,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, TranscriptError> {
        Ok(Self::new(Transcript::read_jsonl(path)?))
    }

    pub fn served(&self) -> usize {
        *self.cursor.lock().expect("replay lock")
    }

    pub fn remaining(&self) -> usize {
        self.records.len() - self.served()
    }
}

impl Provider for ReplayProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError> {
        let mut cursor = self.cursor.lock().expect("replay lock");
        let record = self
            .records
            .get(*cursor)
            .ok_or(ProviderError::TranscriptExhausted { served: *cursor })?;
        if record.stage != request.stage {
            return Err(ProviderError::StageMismatch {
                expected: record.stage,
                got: request.stage,
            });
        }
        *cursor += 1;
        match &record.outcome {
            Outcome::Response(text) => Ok(text.clone()),
            Outcome::Error(e) => Err(e.clone()),
        }
    }
}
