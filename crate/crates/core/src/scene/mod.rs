//! Typed scene graph, its two serializations, and the top-view rasterizer.
//!
//! Two text forms exist. The *parameter* form (`serialize_parameters`) is the
//! object list shown to the provider and compared byte-for-byte in undo tests:
//! vectors as `"(x, y, z)"` with two decimals, colors as `#RRGGBB`. The
//! *document* form (`SceneSnapshot::to_json`) is lossless and is what gets
//! persisted, so a recovered scene keeps full numeric precision.

mod graph;
mod raster;
mod value;

use alloc::string::String;

pub use graph::{
    Field, FieldValue, NewObject, ObjectId, ObjectParams, RemovedObject, RoomBounds, SceneGraph,
    SceneObject, SceneSnapshot,
};
pub use raster::{render_top_view, TopView, MAX_RESOLUTION, MIN_RESOLUTION};
pub use value::{fixed2, normalize_degrees, ColorRGB, Material, Vector3, MIN_EXTENT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("an object named {0:?} already exists")]
    DuplicateName(String),
    #[error("scale {0} must be finite with every extent >= 0.01")]
    InvalidScale(Vector3),
    #[error("no object named {0:?}")]
    NotFound(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("resolution {0} outside 64..=2048")]
    InvalidResolution(u32),
    #[error("malformed scene data: {0}")]
    Malformed(String),
}

impl SceneError {
    pub fn kind(&self) -> &'static str {
        match self {
            SceneError::DuplicateName(_) => "duplicate_name",
            SceneError::InvalidScale(_) => "invalid_scale",
            SceneError::NotFound(_) => "not_found",
            SceneError::InvalidValue(_) => "invalid_value",
            SceneError::InvalidResolution(_) => "invalid_resolution",
            SceneError::Malformed(_) => "malformed",
        }
    }
}
