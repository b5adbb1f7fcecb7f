use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use echo_core::engine::Clock;
use echo_core::pipeline::{prompts, PromptBundle, Provider, ProviderError, Stage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One provider call. The image itself is not stored, only its digest and
/// size, which is enough to audit which requests carried one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptRecord {
    pub seq: u64,
    pub timestamp_ms: u64,
    pub stage: Stage,
    pub provider_id: String,
    pub subject: String,
    pub system_text: String,
    pub user_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_base64_len: Option<usize>,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Response(String),
    Error(ProviderError),
}

impl TranscriptRecord {
    pub fn has_image(&self) -> bool {
        self.image_sha256.is_some()
    }

    pub fn has_object_list(&self) -> bool {
        self.user_text.contains(prompts::OBJECT_LIST_LABEL)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

/// Append-only, thread-safe list of provider calls.
#[derive(Default)]
pub struct Transcript {
    records: Mutex<Vec<TranscriptRecord>>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.records.lock().expect("transcript lock").clone()
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("transcript lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn append(
        &self,
        clock: &dyn Clock,
        provider_id: &str,
        request: &PromptBundle,
        outcome: Outcome,
    ) {
        let mut records = self.records.lock().expect("transcript lock");
        let image = request.image_payload.as_deref();
        let seq = records.len() as u64 + 1;
        records.push(TranscriptRecord {
            seq,
            timestamp_ms: clock.now_ms(),
            stage: request.stage,
            provider_id: provider_id.to_string(),
            subject: request.subject.clone(),
            system_text: request.system_text.clone(),
            user_text: request.user_text.clone(),
            image_sha256: image.map(|b64| hex::encode(Sha256::digest(b64.as_bytes()))),
            image_base64_len: image.map(str::len),
            outcome,
        });
    }

    /// Writes all records as JSON lines.
    pub fn write_jsonl(&self, path: &Path) -> Result<(), TranscriptError> {
        let io_err = |source| TranscriptError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        for r in self.records() {
            serde_json::to_writer(&mut out, &r).expect("records serialize");
            out.write_all(b"\n").map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }

    /// Appends one record's line to an existing file.
    pub fn append_jsonl(path: &Path, record: &TranscriptRecord) -> io::Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        let mut line = serde_json::to_vec(record).expect("records serialize");
        line.push(b'\n');
        f.write_all(&line)
    }

    pub fn read_jsonl(path: &Path) -> Result<Vec<TranscriptRecord>, TranscriptError> {
        let name = path.display().to_string();
        let file = File::open(path).map_err(|source| TranscriptError::Io {
            path: name.clone(),
            source,
        })?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| TranscriptError::Io {
                path: name.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line).map_err(|e| TranscriptError::Parse {
                    path: name.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?,
            );
        }
        Ok(out)
    }
}

/// Passes calls through to `inner` and records each one.
pub struct RecordingProvider<P> {
    inner: P,
    transcript: Arc<Transcript>,
    clock: Box<dyn Clock>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P, transcript: Arc<Transcript>, clock: impl Clock + 'static) -> Self {
        Self {
            inner,
            transcript,
            clock: Box::new(clock),
        }
    }

    pub fn transcript(&self) -> &Arc<Transcript> {
        &self.transcript
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError> {
        let result = self.inner.complete(request);
        let outcome = match &result {
            Ok(text) => Outcome::Response(text.clone()),
            Err(e) => Outcome::Error(e.clone()),
        };
        self.transcript
            .append(self.clock.as_ref(), self.inner.id(), request, outcome);
        result
    }
}
