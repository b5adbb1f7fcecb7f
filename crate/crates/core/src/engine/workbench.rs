use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::log::{
    run_manual, Clock, Effect, LogEntry, LogicalClock, ManualOp, OpKind, OperationLog,
};
use super::state::{Session, SuggestionEntry, SuggestionState};
use super::{replay_log, EngineError};
use crate::action::{execute_batch, invert, ExecPolicy, InversePatch};
use crate::diag::Diagnostic;
use crate::pipeline::{
    generate_actions, generate_suggestions, ActionPlan, AssetResolver, PipelineConfig,
    PipelineError, Provider,
};
use crate::scene::{SceneGraph, SceneSnapshot};

const USER: &str = "user";
const MANUAL: &str = "manual";

/// Action generation for one entry, detached from the workbench so it can run
/// on another thread against a copy of the scene.
#[derive(Debug, Clone)]
pub struct GenerationJob {
    pub session_id: String,
    pub suggestion_id: String,
    pub generation: u32,
    pub text: String,
    pub config: PipelineConfig,
    pub scene: SceneGraph,
}

impl GenerationJob {
    pub fn run(
        &self,
        provider: &dyn Provider,
        resolver: Option<&AssetResolver<'_>>,
    ) -> GenerationResult {
        GenerationResult {
            session_id: self.session_id.clone(),
            suggestion_id: self.suggestion_id.clone(),
            generation: self.generation,
            outcome: generate_actions(&self.config, &self.scene, &self.text, provider, resolver),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerationResult {
    pub session_id: String,
    pub suggestion_id: String,
    pub generation: u32,
    pub outcome: Result<ActionPlan, PipelineError>,
}

/// One scene with its sessions and operation log. Every mutation goes through
/// here, so callers that share a workbench only need one lock per scene.
pub struct Workbench {
    scene: SceneGraph,
    initial: SceneSnapshot,
    log: OperationLog,
    sessions: Vec<Session>,
    last_manual: Option<InversePatch>,
    clock: Box<dyn Clock>,
    policy: ExecPolicy,
}

impl Workbench {
    pub fn new(scene: SceneGraph) -> Self {
        Self {
            initial: scene.snapshot(),
            scene,
            log: OperationLog::new(),
            sessions: Vec::new(),
            last_manual: None,
            clock: Box::new(LogicalClock::starting_at(1)),
            policy: ExecPolicy::default(),
        }
    }

    /// Rebuilds a workbench from persisted pieces by replaying the log.
    pub fn from_parts(
        initial: SceneSnapshot,
        log: OperationLog,
        sessions: Vec<Session>,
    ) -> Result<Self, EngineError> {
        let scene = replay_log(&initial, log.entries())?;
        let last_manual = log
            .entries()
            .iter()
            .rev()
            .find(|e| matches!(e.kind, OpKind::Manual | OpKind::ManualUndo))
            .and_then(|e| match &e.effect {
                Effect::Manual { patch, .. } => Some(patch.clone()),
                _ => None,
            });
        Ok(Self {
            scene,
            initial,
            log,
            sessions,
            last_manual,
            clock: Box::new(LogicalClock::starting_at(1)),
            policy: ExecPolicy::default(),
        })
    }

    pub fn with_clock(mut self, clock: impl Clock + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn scene(&self) -> &SceneGraph {
        &self.scene
    }

    pub fn initial(&self) -> &SceneSnapshot {
        &self.initial
    }

    pub fn log(&self) -> &OperationLog {
        &self.log
    }

    /// Sessions in creation order.
    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn session(&self, session_id: &str) -> Option<&Session> {
        self.sessions.iter().find(|s| s.session_id == session_id)
    }

    pub fn latest_session(&self) -> Option<&Session> {
        self.sessions.last()
    }

    pub fn has_manual_undo(&self) -> bool {
        self.last_manual.is_some()
    }

    fn session_mut(&mut self, session_id: &str) -> Result<&mut Session, EngineError> {
        self.sessions
            .iter_mut()
            .find(|s| s.session_id == session_id)
            .ok_or_else(|| EngineError::UnknownSession(session_id.into()))
    }

    fn entry_mut(
        &mut self,
        session_id: &str,
        suggestion_id: &str,
    ) -> Result<&mut SuggestionEntry, EngineError> {
        self.session_mut(session_id)?.entry_mut(suggestion_id)
    }

    fn record(
        &mut self,
        kind: OpKind,
        ids: Option<(&str, Option<&str>)>,
        revision_before: u64,
        effect: Effect,
    ) {
        let entry = LogEntry {
            seq: self.log.next_seq(),
            timestamp_ms: self.clock.now_ms(),
            actor: if matches!(kind, OpKind::Manual | OpKind::ManualUndo) {
                MANUAL
            } else {
                USER
            }
            .to_string(),
            kind,
            session_id: ids.map(|(s, _)| s.to_string()),
            suggestion_id: ids.and_then(|(_, g)| g.map(ToString::to_string)),
            revision_before,
            revision_after: self.scene.revision(),
            effect,
        };
        self.log.push(entry);
    }

    /// The texts to generate actions for: provider suggestions, or the raw
    /// instruction alone when the suggestion stage is off.
    pub fn request_suggestions(
        config: &PipelineConfig,
        scene: &SceneGraph,
        instruction: &str,
        provider: &dyn Provider,
    ) -> Result<Vec<String>, PipelineError> {
        if config.include_suggestions_stage {
            generate_suggestions(config, scene, instruction, provider)
        } else {
            Ok(vec![instruction.to_string()])
        }
    }

    /// Opens a session with one Processing entry per suggestion and returns
    /// the generation jobs to run. A failed suggestion request still opens
    /// a session, empty, with the error as a diagnostic.
    pub fn create_session(
        &mut self,
        instruction: &str,
        config: PipelineConfig,
        suggestions: Result<Vec<String>, PipelineError>,
    ) -> Result<(String, Vec<GenerationJob>), EngineError> {
        let instruction = instruction.trim();
        if instruction.is_empty() {
            return Err(EngineError::EmptyInstruction);
        }
        config.validate()?;
        let session_id = format!("{}-{}", self.scene.scene_id(), self.sessions.len() + 1);
        let mut session = Session {
            session_id: session_id.clone(),
            scene_id: self.scene.scene_id().to_string(),
            instruction: instruction.to_string(),
            entries: Vec::new(),
            config: config.clone(),
            created_at: self.clock.now_ms(),
            diagnostics: Vec::new(),
        };
        match suggestions {
            Ok(texts) => {
                for (i, text) in texts.into_iter().enumerate() {
                    session.entries.push(SuggestionEntry::new(
                        format!("sg{}", i + 1),
                        text,
                        instruction.to_string(),
                    ));
                }
            }
            Err(e) => session
                .diagnostics
                .push(Diagnostic::new(e.kind(), e.to_string())),
        }
        let jobs = session
            .entries
            .iter()
            .map(|e| GenerationJob {
                session_id: session_id.clone(),
                suggestion_id: e.suggestion_id.clone(),
                generation: e.generation,
                text: e.text.clone(),
                config: config.clone(),
                scene: self.scene.clone(),
            })
            .collect();
        self.sessions.push(session);
        let rev = self.scene.revision();
        self.record(
            OpKind::Instruct,
            Some((&session_id, None)),
            rev,
            Effect::None,
        );
        Ok((session_id, jobs))
    }

    /// Lands a generation result. Results for an older generation, or for an
    /// entry no longer Processing, are dropped; returns whether it landed.
    pub fn complete_generation(&mut self, result: GenerationResult) -> Result<bool, EngineError> {
        let entry = self.entry_mut(&result.session_id, &result.suggestion_id)?;
        if entry.generation != result.generation || entry.state() != SuggestionState::Processing {
            return Ok(false);
        }
        match result.outcome {
            Ok(plan) if !plan.steps.is_empty() => {
                entry.steps = plan.steps;
                entry.diagnostics.extend(plan.diagnostics);
                entry.transition(SuggestionState::Pending, "generate")?;
            }
            Ok(plan) => {
                entry.diagnostics.extend(plan.diagnostics);
                entry.diagnostics.push(Diagnostic::new(
                    "no_valid_steps",
                    "the provider returned no usable actions",
                ));
                entry.transition(SuggestionState::Failed, "generate")?;
            }
            Err(e) => {
                entry
                    .diagnostics
                    .push(Diagnostic::new(e.kind(), e.to_string()));
                entry.transition(SuggestionState::Failed, "generate")?;
            }
        }
        debug_assert!(entry.check_invariants());
        Ok(true)
    }

    /// Instruct with generation run inline, one entry after another.
    pub fn instruct(
        &mut self,
        instruction: &str,
        config: PipelineConfig,
        provider: &dyn Provider,
        resolver: Option<&AssetResolver<'_>>,
    ) -> Result<String, EngineError> {
        let suggestions = Self::request_suggestions(&config, &self.scene, instruction, provider);
        let (session_id, jobs) = self.create_session(instruction, config, suggestions)?;
        for job in jobs {
            self.complete_generation(job.run(provider, resolver))?;
        }
        Ok(session_id)
    }

    /// Executes a Pending entry's steps, all or nothing.
    pub fn apply(&mut self, session_id: &str, suggestion_id: &str) -> Result<u64, EngineError> {
        let policy = self.policy;
        let entry = self.entry_mut(session_id, suggestion_id)?;
        if entry.state() != SuggestionState::Pending {
            return Err(entry.wrong_state("apply"));
        }
        let steps = entry.steps.clone();
        let before = self.scene.revision();
        match execute_batch(&mut self.scene, &steps, policy) {
            Ok(done) => {
                let entry = self.entry_mut(session_id, suggestion_id)?;
                entry.diagnostics.extend(done.diagnostics);
                entry.patch = Some(done.patch);
                entry.transition(SuggestionState::Applied, "apply")?;
                debug_assert!(entry.check_invariants());
                self.record(
                    OpKind::Apply,
                    Some((session_id, Some(suggestion_id))),
                    before,
                    Effect::Steps { steps },
                );
                Ok(self.scene.revision())
            }
            Err(failure) => {
                let entry = self.entry_mut(session_id, suggestion_id)?;
                entry.diagnostics.extend(failure.diagnostics);
                entry.transition(SuggestionState::Failed, "apply")?;
                self.record(
                    OpKind::Apply,
                    Some((session_id, Some(suggestion_id))),
                    before,
                    Effect::RolledBack {
                        steps,
                        failed_step: failure.failed_step,
                    },
                );
                Err(EngineError::AtomicRollback {
                    suggestion_id: suggestion_id.to_string(),
                    failed_step: failure.failed_step,
                    message: failure.error.to_string(),
                })
            }
        }
    }

    /// Re-executes stored steps against the current scene.
    pub fn reapply(&mut self, session_id: &str, suggestion_id: &str) -> Result<u64, EngineError> {
        self.apply(session_id, suggestion_id)
    }

    fn revert_entry(
        &mut self,
        session_id: &str,
        suggestion_id: &str,
        to: SuggestionState,
        op: &'static str,
    ) -> Result<InversePatch, EngineError> {
        let entry = self.entry_mut(session_id, suggestion_id)?;
        if entry.state() != SuggestionState::Applied {
            return Err(entry.wrong_state(op));
        }
        let patch = entry.patch.take().expect("applied entries hold a patch");
        entry.transition(to, op)?;
        let undone = invert(&patch, &mut self.scene);
        self.entry_mut(session_id, suggestion_id)?
            .diagnostics
            .extend(undone.warnings);
        Ok(patch)
    }

    /// Rolls back one Applied entry; other entries keep their changes.
    pub fn undo(&mut self, session_id: &str, suggestion_id: &str) -> Result<u64, EngineError> {
        let before = self.scene.revision();
        let patch =
            self.revert_entry(session_id, suggestion_id, SuggestionState::Pending, "undo")?;
        self.record(
            OpKind::Undo,
            Some((session_id, Some(suggestion_id))),
            before,
            Effect::Invert { patch },
        );
        Ok(self.scene.revision())
    }

    /// Puts an entry back into Processing (undoing it first if Applied) and
    /// returns the job that regenerates its actions against the current scene.
    pub fn begin_regenerate(
        &mut self,
        session_id: &str,
        suggestion_id: &str,
    ) -> Result<GenerationJob, EngineError> {
        let before = self.scene.revision();
        let state = self.entry_mut(session_id, suggestion_id)?.state();
        let effect = match state {
            SuggestionState::Applied => Effect::Invert {
                patch: self.revert_entry(
                    session_id,
                    suggestion_id,
                    SuggestionState::Processing,
                    "regenerate",
                )?,
            },
            _ => {
                self.entry_mut(session_id, suggestion_id)?
                    .transition(SuggestionState::Processing, "regenerate")?;
                Effect::None
            }
        };
        let session = self.session_mut(session_id)?;
        let config = session.config.clone();
        let entry = session.entry_mut(suggestion_id)?;
        entry.generation += 1;
        entry.steps.clear();
        entry.diagnostics.clear();
        let job = GenerationJob {
            session_id: session_id.to_string(),
            suggestion_id: suggestion_id.to_string(),
            generation: entry.generation,
            text: entry.text.clone(),
            config,
            scene: self.scene.clone(),
        };
        self.record(
            OpKind::Regenerate,
            Some((session_id, Some(suggestion_id))),
            before,
            effect,
        );
        Ok(job)
    }

    pub fn regenerate(
        &mut self,
        session_id: &str,
        suggestion_id: &str,
        provider: &dyn Provider,
        resolver: Option<&AssetResolver<'_>>,
    ) -> Result<(), EngineError> {
        let job = self.begin_regenerate(session_id, suggestion_id)?;
        self.complete_generation(job.run(provider, resolver))?;
        Ok(())
    }

    /// A direct edit. It belongs to no suggestion and only the manual undo
    /// slot can reverse it.
    pub fn manual_op(&mut self, op: ManualOp) -> Result<u64, EngineError> {
        let before = self.scene.revision();
        let patch = run_manual(&mut self.scene, &op)?;
        self.last_manual = Some(patch.clone());
        self.record(OpKind::Manual, None, before, Effect::Manual { op, patch });
        Ok(self.scene.revision())
    }

    /// Reverses the most recent manual op, once.
    pub fn manual_undo(&mut self) -> Result<(u64, Vec<Diagnostic>), EngineError> {
        let patch = self.last_manual.take().ok_or(EngineError::NoManualOp)?;
        let before = self.scene.revision();
        let undone = invert(&patch, &mut self.scene);
        self.record(OpKind::ManualUndo, None, before, Effect::Invert { patch });
        Ok((self.scene.revision(), undone.warnings))
    }

    /// Marks every Processing entry Failed; used after a restart, when the
    /// tasks generating them are gone. Returns how many were demoted.
    pub fn demote_processing(&mut self) -> usize {
        let mut count = 0;
        for entry in self.sessions.iter_mut().flat_map(|s| s.entries.iter_mut()) {
            if entry.state() == SuggestionState::Processing {
                entry.diagnostics.push(Diagnostic::new(
                    "interrupted",
                    "action generation did not finish",
                ));
                entry
                    .transition(SuggestionState::Failed, "recover")
                    .expect("processing can always fail");
                count += 1;
            }
        }
        count
    }
}
