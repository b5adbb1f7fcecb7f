//! Action commands, planned steps and their execution against a scene.

mod command;
mod exec;
mod steps;

pub use command::{
    format_command, parse_command, parse_command_with, Action, ActionKind, ActionVerb,
    CommandError, ParseNote, ParseOptions, DEFAULT_MATERIAL_ALIASES,
};
pub use exec::{
    execute, execute_action, execute_batch, invert, placeholder, BatchFailure, BatchOutcome,
    ExecError, ExecPolicy, Executed, InversePatch, Inverted, UndoRecord,
};
pub use steps::{parse_steps_json, AssetBinding, ParsedSteps, PlannedStep, StepsError};
