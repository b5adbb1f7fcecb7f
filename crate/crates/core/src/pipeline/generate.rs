use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::Value;

use super::{build_prompt, PipelineConfig, PipelineError, PromptSlots, Provider, Stage};
use crate::action::{parse_steps_json, ActionKind, AssetBinding, PlannedStep};
use crate::catalog::{choose_category_and_description, Catalog, Embedder};
use crate::diag::Diagnostic;
use crate::json::extract_keyed;
use crate::scene::SceneGraph;

/// Reads `{"suggestions": [{"suggestion": "..."}, ...]}` in array order.
/// Bare strings are accepted as items; empty or non-text items are skipped.
pub fn parse_suggestions(text: &str) -> Result<Vec<String>, PipelineError> {
    let root = extract_keyed(text, "suggestions")?;
    let items = root
        .get("suggestions")
        .ok_or_else(|| PipelineError::Schema("missing \"suggestions\"".to_string()))?
        .as_array()
        .ok_or_else(|| PipelineError::Schema("\"suggestions\" is not an array".to_string()))?;
    Ok(items
        .iter()
        .filter_map(|item| match item {
            Value::String(s) => Some(s.as_str()),
            Value::Object(m) => m.get("suggestion").and_then(Value::as_str),
            _ => None,
        })
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(ToString::to_string)
        .collect())
}

/// Instruction to suggestion texts.
pub fn generate_suggestions(
    config: &PipelineConfig,
    scene: &SceneGraph,
    instruction: &str,
    provider: &dyn Provider,
) -> Result<Vec<String>, PipelineError> {
    if !config.include_suggestions_stage {
        return Err(PipelineError::SuggestionsDisabled);
    }
    let slots = PromptSlots {
        instruction: Some(instruction),
        ..PromptSlots::default()
    };
    let request = build_prompt(Stage::SuggestionGen, config, scene, &slots)?;
    parse_suggestions(&provider.complete(&request)?)
}

/// Catalog access for binding Add steps to assets.
#[derive(Clone, Copy)]
pub struct AssetResolver<'a> {
    pub catalog: &'a Catalog,
    pub embedder: &'a dyn Embedder,
}

impl AssetResolver<'_> {
    /// Category selection, then best description match within that category.
    pub fn resolve(
        &self,
        object_name: &str,
        provider: &dyn Provider,
        diagnostics: &mut Vec<Diagnostic>,
    ) -> Result<AssetBinding, String> {
        let choice = choose_category_and_description(object_name, self.catalog, provider)
            .map_err(|e| e.to_string())?;
        diagnostics.extend(choice.diagnostics);
        let hits = self
            .catalog
            .search(self.embedder, Some(&choice.category), &choice.description)
            .map_err(|e| e.to_string())?;
        let best = hits
            .first()
            .ok_or_else(|| format!("category {:?} has no assets", choice.category))?;
        let record = self
            .catalog
            .get(&best.asset_id)
            .expect("hit comes from the catalog");
        Ok(AssetBinding {
            asset_id: record.asset_id.clone(),
            category: record.category.clone(),
            description: choice.description,
            default_scale: record.default_scale,
        })
    }
}

/// Planned steps for one suggestion (or raw instruction).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionPlan {
    pub steps: Vec<PlannedStep>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Suggestion to planned steps. Each Add is bound to the best catalog asset;
/// when that fails the Add stays a placeholder and a warning is recorded.
pub fn generate_actions(
    config: &PipelineConfig,
    scene: &SceneGraph,
    text: &str,
    provider: &dyn Provider,
    resolver: Option<&AssetResolver<'_>>,
) -> Result<ActionPlan, PipelineError> {
    let slots = PromptSlots {
        suggestion: Some(text),
        ..PromptSlots::default()
    };
    let request = build_prompt(Stage::ActionGen, config, scene, &slots)?;
    let parsed = parse_steps_json(&provider.complete(&request)?)?;
    let mut plan = ActionPlan {
        steps: parsed.steps,
        diagnostics: parsed.diagnostics,
    };
    for (i, step) in plan.steps.iter_mut().enumerate() {
        if !matches!(step.action.kind, ActionKind::Add(_)) {
            continue;
        }
        let outcome = match resolver {
            Some(r) => r.resolve(&step.action.target, provider, &mut plan.diagnostics),
            None => Err("no catalog configured".to_string()),
        };
        match outcome {
            Ok(binding) => step.asset = Some(binding),
            Err(reason) => plan.diagnostics.push(
                Diagnostic::new(
                    "asset_resolution",
                    format!("{:?} added as a placeholder: {reason}", step.action.target),
                )
                .at_step(i)
                .with_raw(step.command_text.clone()),
            ),
        }
    }
    Ok(plan)
}
