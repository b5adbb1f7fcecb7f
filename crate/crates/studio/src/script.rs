//! Scripted design sessions for `echo run-script`.

use echo_core::action::AssetBinding;
use echo_core::catalog::AssetRecord;
use echo_core::engine::{EngineError, ManualOp, SuggestionState, Workbench};
use echo_core::pipeline::{AssetResolver, Condition, PipelineConfig, Provider};
use echo_core::scene::FieldValue;
use echo_core::{Catalog, ColorRGB, Embedder, Material, Vector3};
use serde::Deserialize;

/// One script step. Suggestion ids refer to the most recent session unless
/// `session` names another one.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Instruct {
        instruction: String,
        #[serde(default)]
        condition: Option<String>,
        #[serde(default)]
        config: Option<PipelineConfig>,
    },
    Apply {
        suggestion: String,
        #[serde(default)]
        session: Option<String>,
    },
    /// Applies every Pending entry of the latest session in order.
    ApplyAll,
    Undo {
        suggestion: String,
        #[serde(default)]
        session: Option<String>,
    },
    Regenerate {
        suggestion: String,
        #[serde(default)]
        session: Option<String>,
    },
    AddObject {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        asset_id: Option<String>,
        #[serde(default)]
        category: Option<String>,
        #[serde(default)]
        query: Option<String>,
        position: Vector3,
    },
    MutateObject {
        name: String,
        #[serde(default)]
        position: Option<Vector3>,
        #[serde(default)]
        rotation: Option<Vector3>,
        #[serde(default)]
        scale: Option<Vector3>,
        #[serde(default)]
        color: Option<ColorRGB>,
        #[serde(default)]
        material: Option<Material>,
    },
    DestroyObject {
        name: String,
    },
    ManualUndo,
}

/// A script file: a bare list of steps, or an object with the list under
/// `steps`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Steps(Vec<Step>),
    Object { steps: Vec<Step> },
}

pub fn parse_script(text: &str) -> Result<Vec<Step>, serde_json::Error> {
    Ok(match serde_json::from_str(text)? {
        ScriptFile::Steps(s) | ScriptFile::Object { steps: s } => s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptErrorKind {
    /// A session or suggestion id that does not exist.
    Unknown,
    Invalid,
    Runtime,
}

#[derive(Debug, thiserror::Error)]
#[error("step {step}: {message}")]
pub struct ScriptError {
    /// 1-based.
    pub step: usize,
    pub kind: ScriptErrorKind,
    pub message: String,
}

impl ScriptError {
    fn new(step: usize, kind: ScriptErrorKind, message: impl Into<String>) -> Self {
        Self {
            step,
            kind,
            message: message.into(),
        }
    }

    fn engine(step: usize, e: EngineError) -> Self {
        let kind = match e {
            EngineError::UnknownSession(_) | EngineError::UnknownSuggestion(_) => {
                ScriptErrorKind::Unknown
            }
            EngineError::EmptyInstruction
            | EngineError::Pipeline(echo_core::pipeline::PipelineError::InvalidConfig(_)) => {
                ScriptErrorKind::Invalid
            }
            _ => ScriptErrorKind::Runtime,
        };
        Self::new(step, kind, e.to_string())
    }
}

pub struct Runner<'a> {
    pub provider: &'a dyn Provider,
    pub catalog: &'a Catalog,
    pub embedder: &'a dyn Embedder,
}

impl Runner<'_> {
    /// Runs `steps` in order. An apply that rolls back marks its entry Failed
    /// and the run goes on; any other error stops it.
    pub fn run(&self, wb: &mut Workbench, steps: &[Step]) -> Result<(), ScriptError> {
        let resolver = AssetResolver {
            catalog: self.catalog,
            embedder: self.embedder,
        };
        for (i, step) in steps.iter().enumerate() {
            let n = i + 1;
            let session_for =
                |wb: &Workbench, given: &Option<String>| -> Result<String, ScriptError> {
                    match given {
                        Some(s) => Ok(s.clone()),
                        None => wb
                            .latest_session()
                            .map(|s| s.session_id.clone())
                            .ok_or_else(|| {
                                ScriptError::new(n, ScriptErrorKind::Unknown, "no session yet")
                            }),
                    }
                };
            let tolerate_rollback = |r: Result<u64, EngineError>| match r {
                Ok(_) | Err(EngineError::AtomicRollback { .. }) => Ok(()),
                Err(e) => Err(ScriptError::engine(n, e)),
            };
            match step {
                Step::Instruct {
                    instruction,
                    condition,
                    config,
                } => {
                    let mut config = match (config, condition) {
                        (Some(_), Some(_)) => {
                            return Err(ScriptError::new(
                                n,
                                ScriptErrorKind::Invalid,
                                "give `config` or `condition`, not both",
                            ))
                        }
                        (Some(c), None) => c.clone(),
                        (None, Some(label)) => {
                            PipelineConfig::for_condition(label.parse::<Condition>().map_err(
                                |e| ScriptError::new(n, ScriptErrorKind::Invalid, e.to_string()),
                            )?)
                        }
                        (None, None) => PipelineConfig::default(),
                    };
                    config.provider_id = self.provider.id().to_string();
                    wb.instruct(instruction, config, self.provider, Some(&resolver))
                        .map_err(|e| ScriptError::engine(n, e))?;
                }
                Step::Apply {
                    suggestion,
                    session,
                } => {
                    let sid = session_for(wb, session)?;
                    tolerate_rollback(wb.apply(&sid, suggestion))?;
                }
                Step::ApplyAll => {
                    let sid = session_for(wb, &None)?;
                    let pending: Vec<String> = wb
                        .session(&sid)
                        .map(|s| {
                            s.entries
                                .iter()
                                .filter(|e| e.state() == SuggestionState::Pending)
                                .map(|e| e.suggestion_id.clone())
                                .collect()
                        })
                        .unwrap_or_default();
                    for sug in pending {
                        tolerate_rollback(wb.apply(&sid, &sug))?;
                    }
                }
                Step::Undo {
                    suggestion,
                    session,
                } => {
                    let sid = session_for(wb, session)?;
                    wb.undo(&sid, suggestion)
                        .map_err(|e| ScriptError::engine(n, e))?;
                }
                Step::Regenerate {
                    suggestion,
                    session,
                } => {
                    let sid = session_for(wb, session)?;
                    wb.regenerate(&sid, suggestion, self.provider, Some(&resolver))
                        .map_err(|e| ScriptError::engine(n, e))?;
                }
                Step::AddObject {
                    name,
                    asset_id,
                    category,
                    query,
                    position,
                } => {
                    let record = self
                        .pick_asset(asset_id, category, query)
                        .map_err(|m| ScriptError::new(n, ScriptErrorKind::Invalid, m))?;
                    let name = name
                        .clone()
                        .unwrap_or_else(|| record.name.replace(' ', "_"));
                    let asset = Some(AssetBinding {
                        asset_id: record.asset_id.clone(),
                        category: record.category.clone(),
                        description: record.description.clone(),
                        default_scale: record.default_scale,
                    });
                    wb.manual_op(ManualOp::Add {
                        name,
                        position: *position,
                        asset,
                    })
                    .map_err(|e| ScriptError::engine(n, e))?;
                }
                Step::MutateObject {
                    name,
                    position,
                    rotation,
                    scale,
                    color,
                    material,
                } => {
                    let values: Vec<FieldValue> = [
                        position.map(FieldValue::Position),
                        rotation.map(FieldValue::Rotation),
                        scale.map(FieldValue::Scale),
                        color.map(FieldValue::Color),
                        material.map(FieldValue::Material),
                    ]
                    .into_iter()
                    .flatten()
                    .collect();
                    if values.is_empty() || *material == Some(Material::Unset) {
                        return Err(ScriptError::new(
                            n,
                            ScriptErrorKind::Invalid,
                            "mutate_object needs at least one assignable field",
                        ));
                    }
                    wb.manual_op(ManualOp::Mutate {
                        name: name.clone(),
                        values,
                    })
                    .map_err(|e| ScriptError::engine(n, e))?;
                }
                Step::DestroyObject { name } => {
                    wb.manual_op(ManualOp::Destroy { name: name.clone() })
                        .map_err(|e| ScriptError::engine(n, e))?;
                }
                Step::ManualUndo => {
                    wb.manual_undo().map_err(|e| ScriptError::engine(n, e))?;
                }
            }
        }
        Ok(())
    }

    fn pick_asset(
        &self,
        asset_id: &Option<String>,
        category: &Option<String>,
        query: &Option<String>,
    ) -> Result<&AssetRecord, String> {
        match (asset_id, category, query) {
            (Some(id), None, None) => self
                .catalog
                .find(id)
                .ok_or_else(|| format!("no asset {id:?}")),
            (None, Some(c), Some(q)) => {
                let hits = self
                    .catalog
                    .search(self.embedder, Some(c), q)
                    .map_err(|e| e.to_string())?;
                let best = hits
                    .first()
                    .ok_or_else(|| format!("category {c:?} is empty"))?;
                Ok(self
                    .catalog
                    .get(&best.asset_id)
                    .expect("hits come from the catalog"))
            }
            _ => Err("add_object needs `asset_id`, or `category` and `query`".into()),
        }
    }
}

/// `(session_id, suggestion_id)` of every Failed entry.
pub fn failed_entries(wb: &Workbench) -> Vec<(String, String)> {
    wb.sessions()
        .iter()
        .flat_map(|s| {
            s.entries
                .iter()
                .filter(|e| e.state() == SuggestionState::Failed)
                .map(|e| (s.session_id.clone(), e.suggestion_id.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_forms() {
        let bare = parse_script(r#"[{"op": "instruct", "instruction": "x"}, {"op": "apply_all"}]"#)
            .unwrap();
        let wrapped = parse_script(
            r#"{"steps": [{"op": "instruct", "instruction": "x"}, {"op": "apply_all"}]}"#,
        )
        .unwrap();
        assert_eq!(bare, wrapped);
        assert!(parse_script(r#"[{"op": "apply"}]"#).is_err());
        assert!(parse_script(r#"[{"op": "undo", "suggestion": "sg1", "extra": 1}]"#).is_err());
        assert_eq!(parse_script("[]").unwrap(), vec![]);
    }
}
