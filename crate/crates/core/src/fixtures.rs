//! Data shipped with the crate: a small labeled catalog, a seed living room,
//! the nine study instructions, and the mock rule table.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CatalogError};
use crate::scene::{SceneError, SceneGraph};

pub const CATALOG_JSON: &str = include_str!("../fixtures/catalog.json");
pub const SEED_SCENE_JSON: &str = include_str!("../fixtures/seed_scene.json");
pub const INSTRUCTIONS_JSON: &str = include_str!("../fixtures/study_instructions.json");
pub use crate::pipeline::DEFAULT_MOCK_RULES as MOCK_RULES_JSON;

/// One instruction of the ablation grid with its design dimension and
/// abstraction level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyInstruction {
    pub dimension: String,
    pub abstraction: String,
    pub instruction: String,
}

pub fn catalog() -> Result<Catalog, CatalogError> {
    Catalog::from_json(CATALOG_JSON)
}

pub fn seed_scene(scene_id: &str) -> Result<SceneGraph, SceneError> {
    SceneGraph::from_parameters(scene_id, SEED_SCENE_JSON)
}

pub fn instructions() -> Vec<StudyInstruction> {
    serde_json::from_str(INSTRUCTIONS_JSON).expect("bundled instructions parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_loads() {
        let c = catalog().unwrap();
        assert!(c.records().len() >= 30);
        assert!(c.categories().len() >= 10);
        let s = seed_scene("seed").unwrap();
        assert_eq!(s.revision(), 0);
        assert!(s.get("Sofa").is_some());
        assert_eq!(instructions().len(), 9);
    }
}
