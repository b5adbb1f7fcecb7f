//! The instruction x condition grid behind `echo ablate`.
//!
//! Each cell starts from a fresh copy of the seed scene, asks for suggestions
//! under one input condition, applies every Pending entry and writes
//!
//! ```text
//! {out}/{condition}/{idx}/scene.json        final scene document
//! {out}/{condition}/{idx}/topview.ppm       final top view
//! {out}/{condition}/{idx}/transcript.jsonl  every provider call of the cell
//! {out}/{condition}/{idx}/session.json      the session with entry states
//! ```
//!
//! `idx` is the 1-based position in the instruction list. Clocks are logical,
//! so a rerun with the same provider answers writes identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use echo_core::engine::{LogicalClock, SuggestionState, Workbench};
use echo_core::fixtures::{self, StudyInstruction};
use echo_core::pipeline::{AssetResolver, Condition, PipelineConfig, Provider, Stage};
use echo_core::scene::render_top_view;
use echo_core::{Catalog, Embedder};
use serde::{Deserialize, Serialize};

use crate::provider::{RecordingProvider, ReplayProvider, Transcript, TranscriptError};
use crate::store::{write_atomic, StoreError};

/// Where each cell gets its answers.
#[derive(Clone)]
pub enum CellProvider {
    /// One provider for every cell.
    Shared(Arc<dyn Provider>),
    /// A previous `ablate` output directory; each cell replays its own
    /// transcript.
    ReplayDir(PathBuf),
}

pub struct Grid<'a> {
    pub instructions: &'a [StudyInstruction],
    pub conditions: &'a [Condition],
    pub provider: CellProvider,
    pub catalog: &'a Catalog,
    pub embedder: &'a dyn Embedder,
    pub jobs: usize,
}

/// What one cell did, as listed in `{out}/summary.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellReport {
    pub condition: String,
    pub idx: usize,
    pub instruction: String,
    pub suggestions: usize,
    pub applied: usize,
    pub failed: usize,
    pub requests: usize,
    pub suggestion_requests: usize,
    pub requests_with_image: usize,
    pub requests_with_object_list: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum AblateError {
    #[error("{condition} #{idx}: {message}")]
    Cell {
        condition: String,
        idx: usize,
        message: String,
    },
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Parses the instructions file: study records, or plain strings.
pub fn parse_instructions(text: &str) -> Result<Vec<StudyInstruction>, serde_json::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Item {
        Study(StudyInstruction),
        Plain(String),
    }
    let items: Vec<Item> = serde_json::from_str(text)?;
    Ok(items
        .into_iter()
        .map(|i| match i {
            Item::Study(s) => s,
            Item::Plain(instruction) => StudyInstruction {
                dimension: String::new(),
                abstraction: String::new(),
                instruction,
            },
        })
        .collect())
}

pub fn parse_conditions(list: &str) -> Result<Vec<Condition>, String> {
    list.split(',')
        .map(|c| c.parse::<Condition>().map_err(|e| e.to_string()))
        .collect()
}

pub fn cell_dir(out: &Path, condition: Condition, idx: usize) -> PathBuf {
    out.join(condition.label()).join(idx.to_string())
}

impl Grid<'_> {
    /// Runs every cell, `jobs` at a time, and writes the summary. Reports come
    /// back in condition-major order whatever order the cells finished in.
    pub fn run(&self, out: &Path) -> Result<Vec<CellReport>, AblateError> {
        fs::create_dir_all(out).map_err(|source| AblateError::Io {
            path: out.to_path_buf(),
            source,
        })?;
        let cells: Vec<(Condition, usize)> = self
            .conditions
            .iter()
            .flat_map(|&c| (1..=self.instructions.len()).map(move |i| (c, i)))
            .collect();
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<CellReport, AblateError>>>> =
            Mutex::new((0..cells.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..self.jobs.clamp(1, cells.len().max(1)) {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&(condition, idx)) = cells.get(k) else {
                        break;
                    };
                    let r = self.run_cell(out, condition, idx);
                    results.lock().expect("results lock")[k] = Some(r);
                });
            }
        });
        let reports = results
            .into_inner()
            .expect("results lock")
            .into_iter()
            .map(|r| r.expect("every cell ran"))
            .collect::<Result<Vec<_>, _>>()?;
        let summary = out.join("summary.json");
        write_atomic(
            &summary,
            &serde_json::to_vec_pretty(&reports).expect("reports serialize"),
        )?;
        Ok(reports)
    }

    fn run_cell(
        &self,
        out: &Path,
        condition: Condition,
        idx: usize,
    ) -> Result<CellReport, AblateError> {
        let dir = cell_dir(out, condition, idx);
        let cell_err = |message: String| AblateError::Cell {
            condition: condition.label().to_string(),
            idx,
            message,
        };
        let inner: Arc<dyn Provider> = match &self.provider {
            CellProvider::Shared(p) => Arc::clone(p),
            CellProvider::ReplayDir(root) => Arc::new(ReplayProvider::from_file(
                &cell_dir(root, condition, idx).join("transcript.jsonl"),
            )?),
        };
        let transcript = Arc::new(Transcript::new());
        let provider =
            RecordingProvider::new(inner, Arc::clone(&transcript), LogicalClock::starting_at(1));
        let instruction = &self.instructions[idx - 1].instruction;

        let scene = fixtures::seed_scene("seed").map_err(|e| cell_err(e.to_string()))?;
        let mut wb = Workbench::new(scene).with_clock(LogicalClock::starting_at(1));
        let mut config = PipelineConfig::for_condition(condition);
        config.provider_id = provider.id().to_string();
        let resolver = AssetResolver {
            catalog: self.catalog,
            embedder: self.embedder,
        };
        let sid = wb
            .instruct(instruction, config, &provider, Some(&resolver))
            .map_err(|e| cell_err(e.to_string()))?;
        let pending: Vec<String> = wb
            .session(&sid)
            .expect("just created")
            .entries
            .iter()
            .filter(|e| e.state() == SuggestionState::Pending)
            .map(|e| e.suggestion_id.clone())
            .collect();
        for sug in &pending {
            // A rollback leaves the entry Failed, which the report counts.
            let _ = wb.apply(&sid, sug);
        }

        fs::create_dir_all(&dir).map_err(|source| AblateError::Io {
            path: dir.clone(),
            source,
        })?;
        write_atomic(
            &dir.join("scene.json"),
            wb.scene().snapshot().to_json().as_bytes(),
        )?;
        let view = render_top_view(wb.scene(), PipelineConfig::default().image_resolution)
            .map_err(|e| cell_err(e.to_string()))?;
        write_atomic(&dir.join("topview.ppm"), &view.to_ppm())?;
        let session = wb.session(&sid).expect("just created");
        write_atomic(
            &dir.join("session.json"),
            &serde_json::to_vec_pretty(session).expect("sessions serialize"),
        )?;
        transcript.write_jsonl(&dir.join("transcript.jsonl"))?;

        let records = transcript.records();
        let count = |state| {
            session
                .entries
                .iter()
                .filter(|e| e.state() == state)
                .count()
        };
        Ok(CellReport {
            condition: condition.label().to_string(),
            idx,
            instruction: instruction.clone(),
            suggestions: session.entries.len(),
            applied: count(SuggestionState::Applied),
            failed: count(SuggestionState::Failed),
            requests: records.len(),
            suggestion_requests: records
                .iter()
                .filter(|r| r.stage == Stage::SuggestionGen)
                .count(),
            requests_with_image: records.iter().filter(|r| r.has_image()).count(),
            requests_with_object_list: records.iter().filter(|r| r.has_object_list()).count(),
        })
    }
}
