use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::command::{parse_command_with, ActionKind, ActionVerb, ParseNote, ParseOptions};
use super::Action;
use crate::diag::Diagnostic;
use crate::json::{extract_keyed, ExtractError};
use crate::scene::{fixed2, ColorRGB, Material, Vector3};

/// The catalog asset an Add step resolved to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetBinding {
    pub asset_id: String,
    pub category: String,
    /// Description the asset was matched against.
    pub description: String,
    pub default_scale: Vector3,
}

/// An action as planned for a suggestion: the parsed command, the text it came
/// from, and for Add steps the resolved asset (absent means placeholder).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedStep {
    pub action: Action,
    pub command_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<AssetBinding>,
}

impl PlannedStep {
    pub fn new(action: Action) -> Self {
        let command_text = super::format_command(&action);
        Self {
            action,
            command_text,
            asset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepsError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("steps payload schema error: {0}")]
    Schema(String),
}

impl StepsError {
    pub fn kind(&self) -> &'static str {
        match self {
            StepsError::Extract(e) => e.kind(),
            StepsError::Schema(_) => "schema_error",
        }
    }
}

/// Valid steps in provider order plus diagnostics for dropped or suspicious ones.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedSteps {
    pub steps: Vec<PlannedStep>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Extracts `{"steps": [...]}` from provider output.
///
/// `action_command` is authoritative. The redundant `action`, `selected_obj`
/// and `key` fields are cross-checked and a disagreement only produces a
/// warning. Steps that fail to parse are dropped with a diagnostic; the rest
/// keep their order.
pub fn parse_steps_json(text: &str) -> Result<ParsedSteps, StepsError> {
    let root = extract_keyed(text, "steps")?;
    let steps = root
        .get("steps")
        .ok_or_else(|| StepsError::Schema("missing \"steps\"".to_string()))?
        .as_array()
        .ok_or_else(|| StepsError::Schema("\"steps\" is not an array".to_string()))?;

    let mut out = ParsedSteps::default();
    for (i, raw) in steps.iter().enumerate() {
        match parse_step(i, raw, &mut out.diagnostics) {
            Some(step) => out.steps.push(step),
            None => continue,
        }
    }
    Ok(out)
}

fn parse_step(i: usize, raw: &Value, diags: &mut Vec<Diagnostic>) -> Option<PlannedStep> {
    let raw_text = || raw.to_string();
    let Some(obj) = raw.as_object() else {
        diags.push(
            Diagnostic::new("schema_error", "step is not an object")
                .at_step(i)
                .with_raw(raw_text()),
        );
        return None;
    };
    let Some(command) = obj.get("action_command").and_then(Value::as_str) else {
        diags.push(
            Diagnostic::new("schema_error", "step has no string \"action_command\"")
                .at_step(i)
                .with_raw(raw_text()),
        );
        return None;
    };
    let (action, notes) = match parse_command_with(command, ParseOptions::LENIENT) {
        Ok(parsed) => parsed,
        Err(e) => {
            diags.push(
                Diagnostic::new(e.kind(), e.to_string())
                    .at_step(i)
                    .with_raw(command),
            );
            return None;
        }
    };
    for note in notes {
        let ParseNote::MaterialAlias { given, resolved } = note;
        diags.push(
            Diagnostic::new(
                "material_alias",
                format!("material {given:?} mapped to {}", resolved.name()),
            )
            .at_step(i)
            .with_raw(command),
        );
    }

    let mut disagree = |what: &str, field: &Value| {
        diags.push(
            Diagnostic::new(
                "field_disagreement",
                format!("\"{what}\" field {field} disagrees with action_command; command wins"),
            )
            .at_step(i)
            .with_raw(command),
        );
    };
    if let Some(label) = obj.get("action") {
        let agrees = label
            .as_str()
            .and_then(ActionVerb::from_label)
            .is_some_and(|v| v == action.verb());
        if !agrees {
            disagree("action", label);
        }
    }
    if let Some(selected) = obj.get("selected_obj") {
        if selected.as_str().map(str::trim) != Some(action.target.as_str()) {
            disagree("selected_obj", selected);
        }
    }
    if let Some(key) = obj.get("key") {
        if !key_agrees(&action.kind, key) {
            disagree("key", key);
        }
    }

    Some(PlannedStep {
        action,
        command_text: command.to_string(),
        asset: None,
    })
}

fn key_agrees(kind: &ActionKind, key: &Value) -> bool {
    let text = match key {
        Value::String(s) => s.trim().to_string(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(Value::to_string).collect();
            format!("({})", parts.join(", "))
        }
        Value::Null => String::new(),
        other => other.to_string(),
    };
    // the key is often wrapped the same way as in the command
    let text = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .map(str::trim)
        .unwrap_or(&text)
        .to_string();
    match kind {
        ActionKind::Add(v) | ActionKind::Move(v) | ActionKind::Rotate(v) => {
            Vector3::parse(&text).is_ok_and(|k| same_2dp(&k, v))
        }
        ActionKind::Scale(m) => text.parse::<f64>().is_ok_and(|k| k == *m),
        ActionKind::Color(c) => {
            ColorRGB::parse_vector(&text).is_ok_and(|k| k == *c)
                || ColorRGB::from_hex(&text).is_ok_and(|k| k == *c)
        }
        ActionKind::Style(m) => {
            Material::from_name_ignore_case(&text) == Some(*m)
                || super::command::DEFAULT_MATERIAL_ALIASES
                    .iter()
                    .any(|(alias, am)| alias.eq_ignore_ascii_case(&text) && am == m)
        }
        ActionKind::Destroy => true,
    }
}

fn same_2dp(a: &Vector3, b: &Vector3) -> bool {
    fixed2(a.x) == fixed2(b.x) && fixed2(a.y) == fixed2(b.y) && fixed2(a.z) == fixed2(b.z)
}
