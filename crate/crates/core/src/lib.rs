//! Core of the echo scene assistant.
//!
//! Everything in this crate is pure computation over in-memory values: the
//! typed scene graph and its canonical serializations, the seven-verb action
//! grammar with exact inverse patches, description-based asset retrieval,
//! prompt assembly for the vision-language provider, and the per-suggestion
//! lifecycle. Files, HTTP and clocks live in `echo-studio`.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod action;
pub mod catalog;
pub mod diag;
pub mod engine;
pub mod fixtures;
pub mod json;
pub mod pipeline;
pub mod scene;

pub use action::{Action, ActionKind, ActionVerb, InversePatch, PlannedStep};
pub use catalog::{AssetRecord, Catalog, Embedder, HashNgramEmbedder};
pub use diag::Diagnostic;
pub use engine::{OperationLog, Session, SuggestionState, Workbench};
pub use pipeline::{PipelineConfig, PromptBundle, Provider, Stage};
pub use scene::{ColorRGB, Material, ObjectId, SceneGraph, SceneObject, SceneSnapshot, Vector3};
