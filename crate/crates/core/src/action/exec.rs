use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::command::ActionKind;
use super::steps::PlannedStep;
use crate::diag::Diagnostic;
use crate::scene::{
    ColorRGB, FieldValue, NewObject, ObjectId, RemovedObject, SceneError, SceneGraph, Vector3,
    MIN_EXTENT,
};

/// One primitive undo record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum UndoRecord {
    /// Put `old` back. `new` is what the action wrote, used to spot later edits.
    RestoreField {
        object: ObjectId,
        name: String,
        old: FieldValue,
        new: FieldValue,
    },
    /// Remove an object the action created.
    DeleteObject { object: ObjectId, name: String },
    /// Re-insert an object the action destroyed.
    RestoreObject { removed: RemovedObject },
}

/// Undo records in the order they were produced; inverted back to front.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InversePatch {
    pub records: Vec<UndoRecord>,
}

impl InversePatch {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn extend(&mut self, later: InversePatch) {
        self.records.extend(later.records);
    }

    /// Objects whose fields or existence this patch would touch.
    pub fn touched_objects(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.records.iter().map(|r| match r {
            UndoRecord::RestoreField { object, .. } | UndoRecord::DeleteObject { object, .. } => {
                *object
            }
            UndoRecord::RestoreObject { removed } => removed.object.id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("target object {0:?} is not in the scene")]
    TargetMissing(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl ExecError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExecError::TargetMissing(_) => "target_missing",
            ExecError::Scene(_) => "scene_error",
        }
    }
}

/// What to do when a non-Add action names an object that does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExecPolicy {
    /// Insert a gray unit placeholder under the missing name first. Off by
    /// default: the engine does not invent objects.
    pub auto_add_missing: bool,
}

/// Result of executing one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Executed {
    pub patch: InversePatch,
    /// Set when an Add had to pick a suffixed name: `(requested, used)`.
    pub renamed: Option<(String, String)>,
    pub revision: u64,
}

/// Placeholder look for Adds without a resolved asset.
pub fn placeholder(name: &str, position: Vector3) -> NewObject {
    NewObject::new(name).at(position).colored(ColorRGB::GRAY)
}

/// Applies one planned step to the scene and returns its inverse.
pub fn execute(
    scene: &mut SceneGraph,
    step: &PlannedStep,
    policy: ExecPolicy,
) -> Result<Executed, ExecError> {
    execute_as(scene, step, &step.action.target, policy)
}

/// Like [`execute`] but addressing `target` instead of the step's own name,
/// used when an earlier Add in the same batch was renamed.
fn execute_as(
    scene: &mut SceneGraph,
    step: &PlannedStep,
    target: &str,
    policy: ExecPolicy,
) -> Result<Executed, ExecError> {
    let mut patch = InversePatch::default();
    let kind = step.action.kind;

    if let ActionKind::Add(position) = kind {
        let spec = match &step.asset {
            Some(asset) => NewObject::new(target)
                .at(position)
                .sized(asset.default_scale)
                .asset(asset.asset_id.clone()),
            None => placeholder(target, position),
        };
        let (id, used) = scene.add_object_unique(spec)?;
        let renamed = (used != target).then(|| (target.to_string(), used.clone()));
        patch.records.push(UndoRecord::DeleteObject {
            object: id,
            name: used,
        });
        return Ok(Executed {
            patch,
            renamed,
            revision: scene.revision(),
        });
    }

    let id = match scene.get(target) {
        Some(obj) => obj.id,
        None if policy.auto_add_missing && !matches!(kind, ActionKind::Destroy) => {
            let id = scene.add_object(placeholder(target, Vector3::ZERO))?;
            patch.records.push(UndoRecord::DeleteObject {
                object: id,
                name: target.to_string(),
            });
            id
        }
        None => return Err(ExecError::TargetMissing(target.to_string())),
    };

    let new_value = match kind {
        ActionKind::Move(v) => FieldValue::Position(v),
        ActionKind::Rotate(v) => FieldValue::Rotation(v),
        ActionKind::Scale(m) => {
            let cur = scene.get_by_id(id).expect("resolved above").scale;
            let clamp = |c: f64| {
                if c * m < MIN_EXTENT {
                    MIN_EXTENT
                } else {
                    c * m
                }
            };
            FieldValue::Scale(Vector3::new(clamp(cur.x), clamp(cur.y), clamp(cur.z)))
        }
        ActionKind::Color(c) => FieldValue::Color(c),
        ActionKind::Style(m) => FieldValue::Material(m),
        ActionKind::Destroy => {
            let removed = scene.remove_by_id(id).expect("resolved above");
            patch.records.push(UndoRecord::RestoreObject { removed });
            return Ok(Executed {
                patch,
                renamed: None,
                revision: scene.revision(),
            });
        }
        ActionKind::Add(_) => unreachable!("handled above"),
    };
    let new_value = new_value.validated()?;
    let old = scene.set_field(id, new_value)?;
    patch.records.push(UndoRecord::RestoreField {
        object: id,
        name: target.to_string(),
        old,
        new: new_value,
    });
    Ok(Executed {
        patch,
        renamed: None,
        revision: scene.revision(),
    })
}

/// Successful run of a whole step list.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub patch: InversePatch,
    pub diagnostics: Vec<Diagnostic>,
}

/// A step list that failed part-way and was rolled back.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFailure {
    pub failed_step: usize,
    pub error: ExecError,
    pub diagnostics: Vec<Diagnostic>,
}

/// Executes steps in order, all or nothing.
///
/// Within the batch, a name an Add had to suffix is followed by later steps
/// (`Add {Sofa}` then `Move {Sofa}` moves the new sofa, not an older one). On
/// the first failing step every earlier step is inverted and the scene's
/// parameter serialization is back to its pre-batch bytes.
pub fn execute_batch(
    scene: &mut SceneGraph,
    steps: &[PlannedStep],
    policy: ExecPolicy,
) -> Result<BatchOutcome, BatchFailure> {
    let mut patch = InversePatch::default();
    let mut diagnostics = Vec::new();
    let mut aliases: BTreeMap<String, String> = BTreeMap::new();

    for (i, step) in steps.iter().enumerate() {
        let requested = &step.action.target;
        let target = aliases
            .get(requested)
            .cloned()
            .unwrap_or_else(|| requested.clone());
        match execute_as(scene, step, &target, policy) {
            Ok(done) => {
                if let Some((asked, used)) = done.renamed {
                    diagnostics.push(
                        Diagnostic::new(
                            "name_collision",
                            format!("{asked:?} already exists; added as {used:?}"),
                        )
                        .at_step(i)
                        .with_raw(step.command_text.clone()),
                    );
                    aliases.insert(requested.clone(), used);
                }
                patch.extend(done.patch);
            }
            Err(error) => {
                diagnostics.push(
                    Diagnostic::new(error.kind(), error.to_string())
                        .at_step(i)
                        .with_raw(step.command_text.clone()),
                );
                let undo = invert(&patch, scene);
                diagnostics.extend(undo.warnings);
                diagnostics.push(Diagnostic::new(
                    "atomic_rollback",
                    format!("rolled back {} executed step(s)", i),
                ));
                return Err(BatchFailure {
                    failed_step: i,
                    error,
                    diagnostics,
                });
            }
        }
    }
    Ok(BatchOutcome { patch, diagnostics })
}

/// Outcome of inverting a patch. Inversion never fails: records that can no
/// longer apply are skipped and reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverted {
    pub revision: u64,
    pub warnings: Vec<Diagnostic>,
}

/// Applies a patch's records back to front.
///
/// Fields get this patch's recorded pre-value even if something else changed
/// them since (field-level last restore); such overwrites are reported as
/// `field_conflict`. Created objects are removed, destroyed ones re-inserted
/// at their former index, suffixing the name if it was taken meanwhile.
pub fn invert(patch: &InversePatch, scene: &mut SceneGraph) -> Inverted {
    let mut warnings = Vec::new();
    for record in patch.records.iter().rev() {
        match record {
            UndoRecord::RestoreField {
                object,
                name,
                old,
                new,
            } => {
                let Some(current) = scene.get_by_id(*object).map(|o| o.field(old.field())) else {
                    warnings.push(Diagnostic::new(
                        "target_gone",
                        format!(
                            "{name:?} no longer exists; {} not restored",
                            old.field().name()
                        ),
                    ));
                    continue;
                };
                if current != *new {
                    warnings.push(Diagnostic::new(
                        "field_conflict",
                        format!(
                            "{name:?} {} was changed after this suggestion; restoring its earlier value",
                            old.field().name()
                        ),
                    ));
                }
                scene
                    .set_field(*object, *old)
                    .expect("recorded pre-values are valid");
            }
            UndoRecord::DeleteObject { object, name } => {
                if scene.remove_by_id(*object).is_none() {
                    warnings.push(Diagnostic::new(
                        "target_gone",
                        format!("{name:?} was already removed"),
                    ));
                }
            }
            UndoRecord::RestoreObject { removed } => {
                let wanted = removed.object.name.clone();
                match scene.restore_object(removed.clone()) {
                    Ok((used, true)) => warnings.push(Diagnostic::new(
                        "restore_collision",
                        format!("{wanted:?} is taken; restored as {used:?}"),
                    )),
                    Ok((_, false)) => {}
                    Err(e) => warnings.push(Diagnostic::new("restore_skipped", e.to_string())),
                }
            }
        }
    }
    Inverted {
        revision: scene.revision(),
        warnings,
    }
}

/// Shortcut for executing a bare action (Adds become placeholders).
pub fn execute_action(
    scene: &mut SceneGraph,
    action: &super::Action,
    policy: ExecPolicy,
) -> Result<Executed, ExecError> {
    execute(scene, &PlannedStep::new(action.clone()), policy)
}
