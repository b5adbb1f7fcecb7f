//! Prompt assembly, the provider abstraction, and the two generation stages
//! (instruction to suggestions, suggestion to planned steps).

mod generate;
mod mock;
pub mod prompts;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::action::StepsError;
use crate::json::ExtractError;
use crate::scene::{render_top_view, SceneError, SceneGraph};

pub use generate::{
    generate_actions, generate_suggestions, parse_suggestions, ActionPlan, AssetResolver,
};
pub use mock::{MockProvider, MockRule, DEFAULT_MOCK_RULES, MOCK_FALLBACK};

/// Which request a prompt belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SceneUnderstanding,
    SuggestionGen,
    ActionGen,
    CategorySelect,
    Labeling,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::SceneUnderstanding,
        Stage::SuggestionGen,
        Stage::ActionGen,
        Stage::CategorySelect,
        Stage::Labeling,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::SceneUnderstanding => "scene_understanding",
            Stage::SuggestionGen => "suggestion_gen",
            Stage::ActionGen => "action_gen",
            Stage::CategorySelect => "category_select",
            Stage::Labeling => "labeling",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Input channels and provider settings for one generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Attach the top view (V).
    pub include_vision: bool,
    /// Include the object-parameter list (OP).
    pub include_object_params: bool,
    /// Run the suggestion stage (S); off means the instruction goes straight
    /// to action generation.
    pub include_suggestions_stage: bool,
    pub suggestion_count_hint: u32,
    pub provider_id: String,
    pub model_name: String,
    /// Ask the provider for minimum sampling randomness.
    pub deterministic: bool,
    /// Edge length of the top view in pixels.
    pub image_resolution: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            include_vision: true,
            include_object_params: true,
            include_suggestions_stage: true,
            suggestion_count_hint: 5,
            provider_id: "mock".to_string(),
            model_name: "mock".to_string(),
            deterministic: true,
            image_resolution: 256,
        }
    }
}

impl PipelineConfig {
    pub fn for_condition(condition: Condition) -> Self {
        let (v, op, s) = condition.channels();
        Self {
            include_vision: v,
            include_object_params: op,
            include_suggestions_stage: s,
            ..Self::default()
        }
    }

    /// The named ablation condition these channels correspond to, if any.
    pub fn condition(&self) -> Option<Condition> {
        let key = (
            self.include_vision,
            self.include_object_params,
            self.include_suggestions_stage,
        );
        Condition::ALL.into_iter().find(|c| c.channels() == key)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.suggestion_count_hint == 0 {
            return Err(PipelineError::InvalidConfig(
                "suggestion_count_hint must be at least 1".to_string(),
            ));
        }
        if !self.include_vision && !self.include_object_params {
            return Err(PipelineError::InvalidConfig(
                "at least one of vision and object parameters must be enabled".to_string(),
            ));
        }
        if self.include_vision
            && !(crate::scene::MIN_RESOLUTION..=crate::scene::MAX_RESOLUTION)
                .contains(&self.image_resolution)
        {
            return Err(PipelineError::Scene(SceneError::InvalidResolution(
                self.image_resolution,
            )));
        }
        Ok(())
    }
}

/// The four input-channel combinations of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    VisionParamsSuggestions,
    VisionSuggestions,
    VisionParams,
    ParamsSuggestions,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::VisionParamsSuggestions,
        Condition::VisionSuggestions,
        Condition::VisionParams,
        Condition::ParamsSuggestions,
    ];

    /// `(vision, object params, suggestions)`.
    pub fn channels(&self) -> (bool, bool, bool) {
        match self {
            Condition::VisionParamsSuggestions => (true, true, true),
            Condition::VisionSuggestions => (true, false, true),
            Condition::VisionParams => (true, true, false),
            Condition::ParamsSuggestions => (false, true, true),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Condition::VisionParamsSuggestions => "V+OP+S",
            Condition::VisionSuggestions => "V+S",
            Condition::VisionParams => "V+OP",
            Condition::ParamsSuggestions => "OP+S",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Condition {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Condition::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| PipelineError::InvalidConfig(format!("unknown condition {s:?}")))
    }
}

/// One fully assembled provider request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub stage: Stage,
    pub system_text: String,
    pub user_text: String,
    /// Standard base64 of the attached image (top view or thumbnail).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_payload: Option<String>,
    /// The instruction, suggestion or object name this request is about.
    pub subject: String,
}

impl PromptBundle {
    pub fn has_object_list(&self) -> bool {
        self.user_text.contains(prompts::OBJECT_LIST_LABEL)
    }
}

/// A text-plus-image completion backend.
pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for alloc::boxed::Box<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for alloc::sync::Arc<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderError {
    #[error("provider timed out")]
    Timeout,
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("provider rejected the credentials: {message}")]
    Auth { message: String },
    #[error("provider transport failure: {message}")]
    Transport { message: String },
    #[error("transcript exhausted after {served} response(s)")]
    TranscriptExhausted { served: usize },
    #[error("transcript expected a {expected} request next but got {got}")]
    StageMismatch { expected: Stage, got: Stage },
    #[error("{message}")]
    Other { message: String },
}

impl ProviderError {
    pub fn kind(&self) -> &'static str {
        match self {
            ProviderError::Timeout => "timeout",
            ProviderError::Http { .. } => "http_error",
            ProviderError::Auth { .. } => "auth_error",
            ProviderError::Transport { .. } => "transport_error",
            ProviderError::TranscriptExhausted { .. } => "transcript_exhausted",
            ProviderError::StageMismatch { .. } => "stage_mismatch",
            ProviderError::Other { .. } => "provider_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("prompt slot {0:?} is required for this stage")]
    MissingSlot(&'static str),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("response schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Steps(#[from] StepsError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("the suggestion stage is disabled in this config")]
    SuggestionsDisabled,
}

impl PipelineError {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::MissingSlot(_) => "missing_slot",
            PipelineError::Provider(e) => e.kind(),
            PipelineError::Extract(e) => e.kind(),
            PipelineError::Schema(_) => "schema_error",
            PipelineError::Steps(e) => e.kind(),
            PipelineError::Scene(_) => "scene_error",
            PipelineError::InvalidConfig(_) => "invalid_config",
            PipelineError::SuggestionsDisabled => "suggestions_disabled",
        }
    }
}

/// Stage-specific inputs for [`build_prompt`].
#[derive(Debug, Clone, Default)]
pub struct PromptSlots<'a> {
    pub instruction: Option<&'a str>,
    pub suggestion: Option<&'a str>,
    pub object_name: Option<&'a str>,
    pub categories: Option<&'a [String]>,
    pub thumbnail: Option<&'a [u8]>,
}

/// The scene-understanding text for the enabled channels.
pub fn scene_preamble(config: &PipelineConfig) -> String {
    let mut out = String::new();
    match (config.include_object_params, config.include_vision) {
        (true, true) => {
            out.push_str(prompts::SCENE_OBJECTS_CLAUSE);
            out.push_str(prompts::SCENE_IMAGE_CLAUSE);
        }
        (true, false) => out.push_str(prompts::SCENE_OBJECTS_CLAUSE),
        (false, true) => {
            let clause = prompts::SCENE_IMAGE_CLAUSE;
            let clause = clause.strip_prefix("also I").map(|rest| format!("I{rest}"));
            out.push_str(clause.as_deref().unwrap_or(prompts::SCENE_IMAGE_CLAUSE));
        }
        (false, false) => {}
    }
    out.push_str(prompts::SCENE_TAIL);
    out
}

/// Builds the request for `stage`. Scene-bearing stages carry the object list
/// only with OP enabled and the top view only with V enabled.
pub fn build_prompt(
    stage: Stage,
    config: &PipelineConfig,
    scene: &SceneGraph,
    slots: &PromptSlots<'_>,
) -> Result<PromptBundle, PipelineError> {
    match stage {
        Stage::SceneUnderstanding => {
            let (user_text, image_payload) = scene_channels(config, scene, String::new())?;
            Ok(PromptBundle {
                stage,
                system_text: scene_preamble(config),
                user_text,
                image_payload,
                subject: String::new(),
            })
        }
        Stage::SuggestionGen => {
            let instruction = slots
                .instruction
                .ok_or(PipelineError::MissingSlot("instruction"))?;
            let head = format!("User Instruction : {instruction}");
            let (mut user_text, image_payload) = scene_channels(config, scene, head)?;
            user_text.push_str(&format!(
                "\n\nPlease propose about {} suggestions.",
                config.suggestion_count_hint
            ));
            Ok(PromptBundle {
                stage,
                system_text: with_preamble(config, prompts::SUGGESTIONS_SYSTEM),
                user_text,
                image_payload,
                subject: instruction.to_string(),
            })
        }
        Stage::ActionGen => {
            // without the suggestion stage the raw instruction takes its place
            let text = slots
                .suggestion
                .or(slots.instruction)
                .ok_or(PipelineError::MissingSlot("suggestion"))?;
            let head = format!("Suggestion : {text}");
            let (user_text, image_payload) = scene_channels(config, scene, head)?;
            Ok(PromptBundle {
                stage,
                system_text: with_preamble(config, prompts::ACTIONS_SYSTEM),
                user_text,
                image_payload,
                subject: text.to_string(),
            })
        }
        Stage::CategorySelect => {
            let name = slots
                .object_name
                .ok_or(PipelineError::MissingSlot("object_name"))?;
            let categories = slots
                .categories
                .ok_or(PipelineError::MissingSlot("categories"))?;
            Ok(category_prompt(name, categories))
        }
        Stage::Labeling => {
            let name = slots
                .object_name
                .ok_or(PipelineError::MissingSlot("object_name"))?;
            let thumbnail = slots
                .thumbnail
                .ok_or(PipelineError::MissingSlot("thumbnail"))?;
            Ok(labeling_prompt(name, thumbnail))
        }
    }
}

pub(crate) fn category_prompt(name: &str, categories: &[String]) -> PromptBundle {
    PromptBundle {
        stage: Stage::CategorySelect,
        system_text: prompts::CATEGORY_SYSTEM.to_string(),
        user_text: format!(
            "The object is : {name}.\n\nCategories include: {}.",
            categories.join(", ")
        ),
        image_payload: None,
        subject: name.to_string(),
    }
}

pub(crate) fn labeling_prompt(name: &str, thumbnail: &[u8]) -> PromptBundle {
    PromptBundle {
        stage: Stage::Labeling,
        system_text: prompts::LABELING_SYSTEM.to_string(),
        user_text: format!(
            "object_name: {name}\n\nimage: {}",
            prompts::IMAGE_PLACEHOLDER
        ),
        image_payload: Some(base64::engine::general_purpose::STANDARD.encode(thumbnail)),
        subject: name.to_string(),
    }
}

fn with_preamble(config: &PipelineConfig, system: &str) -> String {
    format!("{}\n\n{}", scene_preamble(config), system)
}

fn scene_channels(
    config: &PipelineConfig,
    scene: &SceneGraph,
    head: String,
) -> Result<(String, Option<String>), PipelineError> {
    let mut parts: Vec<String> = Vec::new();
    if !head.is_empty() {
        parts.push(head);
    }
    if config.include_object_params {
        parts.push(format!(
            "{}{}. ",
            prompts::OBJECT_LIST_LABEL,
            scene.serialize_parameters()
        ));
    }
    let mut image = None;
    if config.include_vision {
        let view = render_top_view(scene, config.image_resolution)?;
        image = Some(view.to_base64());
        parts.push(format!(
            "{}{}",
            prompts::TOP_VIEW_LABEL,
            prompts::IMAGE_PLACEHOLDER
        ));
    }
    Ok((parts.join("\n\n"), image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::NewObject;

    fn scene() -> SceneGraph {
        let mut s = SceneGraph::new("s");
        s.add_object(NewObject::new("Sofa")).unwrap();
        s
    }

    fn slots(instruction: &str) -> PromptSlots<'_> {
        PromptSlots {
            instruction: Some(instruction),
            ..PromptSlots::default()
        }
    }

    #[test]
    fn conditions_map_to_channels() {
        for c in Condition::ALL {
            let config = PipelineConfig::for_condition(c);
            assert_eq!(config.condition(), Some(c));
            assert_eq!(c.label().parse::<Condition>().unwrap(), c);
            config.validate().unwrap();
        }
        assert_eq!(Condition::VisionSuggestions.channels(), (true, false, true));
        assert!("V+X".parse::<Condition>().is_err());
    }

    #[test]
    fn vision_only_suggestion_prompt_has_no_object_list() {
        let config = PipelineConfig::for_condition(Condition::VisionSuggestions);
        let b = build_prompt(Stage::SuggestionGen, &config, &scene(), &slots("relax")).unwrap();
        assert!(b.user_text.starts_with("User Instruction : relax"));
        assert!(!b.has_object_list());
        assert!(!b.system_text.contains("list of objects"));
        assert!(b
            .system_text
            .starts_with("I will provide you the top view picture"));
        assert!(b.image_payload.is_some());
        assert!(b.user_text.ends_with("Please propose about 5 suggestions."));
    }

    #[test]
    fn full_condition_action_prompt_has_all_channels() {
        let config = PipelineConfig::default();
        let s = PromptSlots {
            suggestion: Some("add a large screen on Wall_N"),
            ..PromptSlots::default()
        };
        let b = build_prompt(Stage::ActionGen, &config, &scene(), &s).unwrap();
        assert!(b
            .user_text
            .starts_with("Suggestion : add a large screen on Wall_N"));
        assert!(b.has_object_list());
        assert!(b.user_text.contains("Top View Image: [attached image]"));
        assert!(b.image_payload.as_deref().unwrap().len() > 100);
        assert!(b.system_text.contains(prompts::ACTIONS_SYSTEM));
        assert_eq!(b.subject, "add a large screen on Wall_N");
    }

    #[test]
    fn params_only_has_no_image() {
        let config = PipelineConfig::for_condition(Condition::ParamsSuggestions);
        let b = build_prompt(Stage::SuggestionGen, &config, &scene(), &slots("x")).unwrap();
        assert!(b.image_payload.is_none());
        assert!(!b.user_text.contains(prompts::TOP_VIEW_LABEL));
        assert!(!b.system_text.contains("top view"));
    }

    #[test]
    fn empty_scene_object_list() {
        let b = build_prompt(
            Stage::SuggestionGen,
            &PipelineConfig::default(),
            &SceneGraph::new("e"),
            &slots("x"),
        )
        .unwrap();
        assert!(b.user_text.contains("Object list: []. "));
    }

    #[test]
    fn full_preamble_is_the_whole_template() {
        let p = scene_preamble(&PipelineConfig::default());
        assert!(p.starts_with("I will give you a list of objects in json format"));
        assert!(p.ends_with("also I will provide you the top view picture of the 3D scene, please understand this scene, please understand this scene."));
    }

    #[test]
    fn missing_slots() {
        let c = PipelineConfig::default();
        let none = PromptSlots::default();
        assert_eq!(
            build_prompt(Stage::SuggestionGen, &c, &scene(), &none),
            Err(PipelineError::MissingSlot("instruction"))
        );
        assert_eq!(
            build_prompt(Stage::CategorySelect, &c, &scene(), &none),
            Err(PipelineError::MissingSlot("object_name"))
        );
    }

    #[test]
    fn category_and_labeling_prompts() {
        let cats = ["Sofa".to_string(), "Chair".to_string()];
        let b = category_prompt("sofa", &cats);
        assert_eq!(
            b.user_text,
            "The object is : sofa.\n\nCategories include: Sofa, Chair."
        );
        let l = labeling_prompt("Armchair1_C1", b"img");
        assert_eq!(
            l.user_text,
            "object_name: Armchair1_C1\n\nimage: [attached image]"
        );
        assert_eq!(l.image_payload.as_deref(), Some("aW1n"));
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = PipelineConfig::default();
        c.suggestion_count_hint = 0;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.image_resolution = 10;
        assert!(c.validate().is_err());
    }
}
