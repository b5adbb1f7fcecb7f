use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::action::{
    execute, execute_batch, invert, Action, ActionKind, AssetBinding, ExecPolicy, InversePatch,
    PlannedStep, UndoRecord,
};
use crate::scene::{FieldValue, SceneError, SceneGraph, SceneSnapshot, Vector3};

/// Millisecond timestamps for log records.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

/// Counts up from a start value; gives reproducible logs.
#[derive(Debug, Default)]
pub struct LogicalClock(AtomicU64);

impl LogicalClock {
    pub fn starting_at(t: u64) -> Self {
        Self(AtomicU64::new(t))
    }
}

impl Clock for LogicalClock {
    fn now_ms(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}

/// A direct edit outside any suggestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ManualOp {
    /// Place an asset (or a gray placeholder when `asset` is absent).
    Add {
        name: String,
        position: Vector3,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        asset: Option<AssetBinding>,
    },
    /// Several fields of one object at once; undone together.
    Mutate {
        name: String,
        values: Vec<FieldValue>,
    },
    Destroy {
        name: String,
    },
}

/// Runs a manual op and returns its inverse.
pub fn run_manual(scene: &mut SceneGraph, op: &ManualOp) -> Result<InversePatch, EngineError> {
    match op {
        ManualOp::Add {
            name,
            position,
            asset,
        } => {
            let step = PlannedStep {
                asset: asset.clone(),
                ..PlannedStep::new(Action::new(name.clone(), ActionKind::Add(*position)))
            };
            Ok(execute(scene, &step, ExecPolicy::default())?.patch)
        }
        ManualOp::Mutate { name, values } => {
            let id = scene
                .get(name)
                .ok_or_else(|| SceneError::NotFound(name.clone()))?
                .id;
            let values = values
                .iter()
                .map(|v| v.validated())
                .collect::<Result<Vec<_>, _>>()?;
            let mut patch = InversePatch::default();
            for value in values {
                let old = scene.set_field(id, value)?;
                patch.records.push(UndoRecord::RestoreField {
                    object: id,
                    name: name.clone(),
                    old,
                    new: value,
                });
            }
            Ok(patch)
        }
        ManualOp::Destroy { name } => {
            let removed = scene.remove_object(name)?;
            Ok(InversePatch {
                records: alloc::vec![UndoRecord::RestoreObject { removed }],
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Instruct,
    Apply,
    Undo,
    Regenerate,
    Manual,
    ManualUndo,
}

/// What a record did to the scene, in enough detail to redo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Effect {
    None,
    /// Steps executed in full.
    Steps {
        steps: Vec<PlannedStep>,
    },
    /// Steps executed until `failed_step`, then rolled back.
    RolledBack {
        steps: Vec<PlannedStep>,
        failed_step: usize,
    },
    Invert {
        patch: InversePatch,
    },
    /// `patch` is informational: replay recomputes it, recovery uses it to
    /// restore the manual-undo slot.
    Manual {
        op: ManualOp,
        patch: InversePatch,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub timestamp_ms: u64,
    /// `user` for suggestion operations, `manual` for direct edits.
    pub actor: String,
    pub kind: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion_id: Option<String>,
    pub revision_before: u64,
    pub revision_after: u64,
    pub effect: Effect,
}

/// Append-only record of everything that happened to one scene.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OperationLog {
    entries: Vec<LogEntry>,
}

impl OperationLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<LogEntry>) -> Result<Self, EngineError> {
        for (i, e) in entries.iter().enumerate() {
            if e.seq != i as u64 + 1 {
                return Err(EngineError::LogCorrupt {
                    seq: e.seq,
                    reason: format!("expected sequence number {}", i + 1),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&LogEntry> {
        self.entries.last()
    }

    pub(crate) fn next_seq(&self) -> u64 {
        self.entries.len() as u64 + 1
    }

    pub(crate) fn push(&mut self, entry: LogEntry) -> &LogEntry {
        debug_assert_eq!(entry.seq, self.next_seq());
        self.entries.push(entry);
        self.entries.last().expect("just pushed")
    }
}

/// Rebuilds a scene by redoing `entries` on top of `initial`. Every record's
/// revisions must line up; a prefix of a log yields the scene at that point.
pub fn replay_log(
    initial: &SceneSnapshot,
    entries: &[LogEntry],
) -> Result<SceneGraph, EngineError> {
    let mut scene = initial.to_scene();
    for entry in entries {
        let corrupt = |reason: String| EngineError::LogCorrupt {
            seq: entry.seq,
            reason,
        };
        if scene.revision() != entry.revision_before {
            return Err(corrupt(format!(
                "scene is at revision {} but the record starts at {}",
                scene.revision(),
                entry.revision_before
            )));
        }
        match &entry.effect {
            Effect::None => {}
            Effect::Steps { steps } => {
                execute_batch(&mut scene, steps, ExecPolicy::default()).map_err(|f| {
                    corrupt(format!(
                        "step {} failed on replay: {}",
                        f.failed_step, f.error
                    ))
                })?;
            }
            Effect::RolledBack { steps, failed_step } => {
                match execute_batch(&mut scene, steps, ExecPolicy::default()) {
                    Err(f) if f.failed_step == *failed_step => {}
                    Err(f) => {
                        return Err(corrupt(format!(
                            "expected step {failed_step} to fail, step {} failed",
                            f.failed_step
                        )))
                    }
                    Ok(_) => return Err(corrupt("recorded failure did not recur".to_string())),
                }
            }
            Effect::Invert { patch } => {
                invert(patch, &mut scene);
            }
            Effect::Manual { op, .. } => {
                run_manual(&mut scene, op).map_err(|e| corrupt(e.to_string()))?;
            }
        }
        if scene.revision() != entry.revision_after {
            return Err(corrupt(format!(
                "replay ended at revision {} but the record ends at {}",
                scene.revision(),
                entry.revision_after
            )));
        }
    }
    Ok(scene)
}
