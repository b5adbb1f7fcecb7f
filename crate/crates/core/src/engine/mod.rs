//! Suggestion sessions, the per-suggestion lifecycle, selective apply and
//! undo, manual edits, and the operation log that can rebuild a scene.

mod log;
mod state;
mod workbench;

use alloc::string::String;

pub use log::{
    replay_log, run_manual, Clock, Effect, LogEntry, LogicalClock, ManualOp, OpKind, OperationLog,
};
pub use state::{Session, SuggestionEntry, SuggestionState};
pub use workbench::{GenerationJob, GenerationResult, Workbench};

use crate::action::ExecError;
use crate::pipeline::PipelineError;
use crate::scene::SceneError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("suggestion {suggestion_id} is {state}; cannot {operation}")]
    WrongState {
        suggestion_id: String,
        state: SuggestionState,
        operation: &'static str,
    },
    #[error("no suggestion {0:?} in this session")]
    UnknownSuggestion(String),
    #[error("no session {0:?}")]
    UnknownSession(String),
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("step {failed_step} of suggestion {suggestion_id} failed ({message}); earlier steps were rolled back")]
    AtomicRollback {
        suggestion_id: String,
        failed_step: usize,
        message: String,
    },
    #[error("no manual operation to undo")]
    NoManualOp,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("operation log record {seq}: {reason}")]
    LogCorrupt { seq: u64, reason: String },
}

impl EngineError {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineError::WrongState { .. } => "wrong_state",
            EngineError::UnknownSuggestion(_) => "unknown_suggestion",
            EngineError::UnknownSession(_) => "unknown_session",
            EngineError::EmptyInstruction => "empty_instruction",
            EngineError::AtomicRollback { .. } => "atomic_rollback",
            EngineError::NoManualOp => "no_manual_op",
            EngineError::Pipeline(e) => e.kind(),
            EngineError::Exec(e) => e.kind(),
            EngineError::Scene(e) => e.kind(),
            EngineError::LogCorrupt { .. } => "log_corrupt",
        }
    }
}
