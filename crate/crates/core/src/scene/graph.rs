use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::value::{ColorRGB, Material, Vector3, MIN_EXTENT};
use super::SceneError;

/// Opaque object identifier; never reused within one scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: ObjectId,
    pub name: String,
    pub position: Vector3,
    pub rotation: Vector3,
    pub scale: Vector3,
    pub color: ColorRGB,
    pub material: Material,
    #[serde(default)]
    pub asset_ref: Option<String>,
}

impl SceneObject {
    /// Ground-plane extents `(x, z)` in meters. Scale is read directly as size.
    pub fn footprint(&self) -> (f64, f64) {
        (self.scale.x, self.scale.z)
    }

    pub fn field(&self, field: Field) -> FieldValue {
        match field {
            Field::Position => FieldValue::Position(self.position),
            Field::Rotation => FieldValue::Rotation(self.rotation),
            Field::Scale => FieldValue::Scale(self.scale),
            Field::Color => FieldValue::Color(self.color),
            Field::Material => FieldValue::Material(self.material),
        }
    }

    fn params(&self) -> ObjectParams {
        ObjectParams {
            name: self.name.clone(),
            position: self.position.to_string(),
            rotation: self.rotation.to_string(),
            scale: self.scale.to_string(),
            color: self.color.to_hex(),
            material: self.material.name().to_string(),
        }
    }
}

/// Everything needed to create an object; the scene assigns the id.
#[derive(Debug, Clone, PartialEq)]
pub struct NewObject {
    pub name: String,
    pub position: Vector3,
    pub rotation: Vector3,
    pub scale: Vector3,
    pub color: ColorRGB,
    pub material: Material,
    pub asset_ref: Option<String>,
}

impl NewObject {
    /// A white, unit-sized object at the origin.
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            position: Vector3::ZERO,
            rotation: Vector3::ZERO,
            scale: Vector3::ONE,
            color: ColorRGB::WHITE,
            material: Material::Unset,
            asset_ref: None,
        }
    }

    pub fn at(mut self, position: Vector3) -> Self {
        self.position = position;
        self
    }

    pub fn rotated(mut self, rotation: Vector3) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn sized(mut self, scale: Vector3) -> Self {
        self.scale = scale;
        self
    }

    pub fn colored(mut self, color: ColorRGB) -> Self {
        self.color = color;
        self
    }

    pub fn styled(mut self, material: Material) -> Self {
        self.material = material;
        self
    }

    pub fn asset(mut self, asset_ref: impl Into<String>) -> Self {
        self.asset_ref = Some(asset_ref.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Position,
    Rotation,
    Scale,
    Color,
    Material,
}

impl Field {
    pub const ALL: [Field; 5] = [
        Field::Position,
        Field::Rotation,
        Field::Scale,
        Field::Color,
        Field::Material,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Field::Position => "position",
            Field::Rotation => "rotation",
            Field::Scale => "scale",
            Field::Color => "color",
            Field::Material => "material",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Field::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// A value for one mutable field of an object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", content = "value", rename_all = "snake_case")]
pub enum FieldValue {
    Position(Vector3),
    Rotation(Vector3),
    Scale(Vector3),
    Color(ColorRGB),
    Material(Material),
}

impl FieldValue {
    pub fn field(&self) -> Field {
        match self {
            FieldValue::Position(_) => Field::Position,
            FieldValue::Rotation(_) => Field::Rotation,
            FieldValue::Scale(_) => Field::Scale,
            FieldValue::Color(_) => Field::Color,
            FieldValue::Material(_) => Field::Material,
        }
    }

    /// Parses a user-supplied value for `field`: vectors as `(x, y, z)`, colors
    /// as `#RRGGBB` or `(r, g, b)`, materials by exact name.
    pub fn parse(field: Field, text: &str) -> Result<FieldValue, SceneError> {
        let value = match field {
            Field::Position => FieldValue::Position(Vector3::parse(text)?),
            Field::Rotation => FieldValue::Rotation(Vector3::parse(text)?),
            Field::Scale => FieldValue::Scale(Vector3::parse(text)?),
            Field::Color => FieldValue::Color(if text.trim_start().starts_with('#') {
                ColorRGB::from_hex(text.trim())?
            } else {
                ColorRGB::parse_vector(text)?
            }),
            Field::Material => {
                FieldValue::Material(Material::from_name(text.trim()).ok_or_else(|| {
                    SceneError::InvalidValue(format!("unknown material {text:?}"))
                })?)
            }
        };
        value.validated()
    }

    /// Checks the value and brings rotations into `[0, 360)`.
    pub fn validated(self) -> Result<FieldValue, SceneError> {
        match self {
            FieldValue::Position(v) if !v.is_finite() => {
                Err(SceneError::InvalidValue(format!("non-finite position {v}")))
            }
            FieldValue::Rotation(v) if !v.is_finite() => {
                Err(SceneError::InvalidValue(format!("non-finite rotation {v}")))
            }
            FieldValue::Rotation(v) => Ok(FieldValue::Rotation(v.normalized_angles())),
            FieldValue::Scale(v) => {
                check_scale(v)?;
                Ok(self)
            }
            other => Ok(other),
        }
    }
}

fn check_scale(v: Vector3) -> Result<(), SceneError> {
    if v.is_finite() && v.x >= MIN_EXTENT && v.y >= MIN_EXTENT && v.z >= MIN_EXTENT {
        Ok(())
    } else {
        Err(SceneError::InvalidScale(v))
    }
}

/// An object taken out of the scene together with its former position in the
/// object order, enough to put it back exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedObject {
    pub index: usize,
    pub object: SceneObject,
}

/// Ground-plane room extents: `min`/`max` are `[x, z]` corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomBounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl RoomBounds {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self, SceneError> {
        let ok = min.iter().chain(max.iter()).all(|v| v.is_finite())
            && max[0] > min[0]
            && max[1] > min[1];
        if ok {
            Ok(Self { min, max })
        } else {
            Err(SceneError::InvalidValue(format!(
                "room bounds {min:?}..{max:?} are empty or non-finite"
            )))
        }
    }

    /// An axis-aligned `width` x `depth` room centered at the origin.
    pub fn centered(width: f64, depth: f64) -> Result<Self, SceneError> {
        Self::new([-width / 2.0, -depth / 2.0], [width / 2.0, depth / 2.0])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn depth(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

impl Default for RoomBounds {
    fn default() -> Self {
        Self {
            min: [-4.0, -4.0],
            max: [4.0, 4.0],
        }
    }
}

/// One entry of the provider-facing object list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectParams {
    pub name: String,
    pub position: String,
    pub rotation: String,
    pub scale: String,
    pub color: String,
    pub material: String,
}

/// The mutable world: an ordered list of uniquely named objects.
///
/// Every successful mutation bumps `revision` by one. Failed calls leave the
/// scene and its revision untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    scene_id: String,
    revision: u64,
    next_id: u64,
    bounds: RoomBounds,
    objects: Vec<SceneObject>,
}

impl SceneGraph {
    pub fn new(scene_id: impl Into<String>) -> Self {
        Self::with_bounds(scene_id, RoomBounds::default())
    }

    pub fn with_bounds(scene_id: impl Into<String>, bounds: RoomBounds) -> Self {
        Self {
            scene_id: scene_id.into(),
            revision: 0,
            next_id: 1,
            bounds,
            objects: Vec::new(),
        }
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn bounds(&self) -> &RoomBounds {
        &self.bounds
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn get_by_id(&self, id: ObjectId) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    fn index_of_id(&self, id: ObjectId) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    fn commit(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    /// `base` if free, otherwise the first free `base_2`, `base_3`, ...
    pub fn unique_name(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        (2u64..)
            .map(|n| format!("{base}_{n}"))
            .find(|candidate| !self.contains(candidate))
            .expect("unbounded suffix search")
    }

    fn validate_new(spec: &NewObject) -> Result<NewObject, SceneError> {
        check_name(&spec.name)?;
        check_scale(spec.scale)?;
        if !spec.position.is_finite() {
            return Err(SceneError::InvalidValue(format!(
                "non-finite position {}",
                spec.position
            )));
        }
        if !spec.rotation.is_finite() {
            return Err(SceneError::InvalidValue(format!(
                "non-finite rotation {}",
                spec.rotation
            )));
        }
        let mut spec = spec.clone();
        spec.rotation = spec.rotation.normalized_angles();
        Ok(spec)
    }

    /// Appends an object; fails on a name collision.
    pub fn add_object(&mut self, spec: NewObject) -> Result<ObjectId, SceneError> {
        if self.contains(&spec.name) {
            return Err(SceneError::DuplicateName(spec.name));
        }
        let spec = Self::validate_new(&spec)?;
        Ok(self.push(spec))
    }

    /// Appends an object, suffixing the name if it collides. Returns the id and
    /// the name actually used.
    pub fn add_object_unique(
        &mut self,
        mut spec: NewObject,
    ) -> Result<(ObjectId, String), SceneError> {
        let checked = Self::validate_new(&spec)?;
        spec = checked;
        spec.name = self.unique_name(&spec.name);
        let name = spec.name.clone();
        Ok((self.push(spec), name))
    }

    fn push(&mut self, spec: NewObject) -> ObjectId {
        let id = ObjectId(self.next_id);
        self.next_id += 1;
        self.objects.push(SceneObject {
            id,
            name: spec.name,
            position: spec.position,
            rotation: spec.rotation,
            scale: spec.scale,
            color: spec.color,
            material: spec.material,
            asset_ref: spec.asset_ref,
        });
        self.commit();
        id
    }

    pub fn remove_object(&mut self, name: &str) -> Result<RemovedObject, SceneError> {
        let index = self
            .objects
            .iter()
            .position(|o| o.name == name)
            .ok_or_else(|| SceneError::NotFound(name.to_string()))?;
        Ok(self.remove_at(index))
    }

    pub fn remove_by_id(&mut self, id: ObjectId) -> Option<RemovedObject> {
        self.index_of_id(id).map(|index| self.remove_at(index))
    }

    fn remove_at(&mut self, index: usize) -> RemovedObject {
        let object = self.objects.remove(index);
        self.commit();
        RemovedObject { index, object }
    }

    /// Puts a removed object back at its former index (clamped to the current
    /// length). A name taken in the meantime gets suffixed; the returned flag
    /// reports that. Fails if the id is already live.
    pub fn restore_object(&mut self, removed: RemovedObject) -> Result<(String, bool), SceneError> {
        let RemovedObject { index, mut object } = removed;
        if self.index_of_id(object.id).is_some() {
            return Err(SceneError::Malformed(format!(
                "object {} is already present",
                object.id
            )));
        }
        let renamed = self.contains(&object.name);
        if renamed {
            object.name = self.unique_name(&object.name);
        }
        let name = object.name.clone();
        self.next_id = self.next_id.max(object.id.0 + 1);
        let at = index.min(self.objects.len());
        self.objects.insert(at, object);
        self.commit();
        Ok((name, renamed))
    }

    /// Replaces one field, returning the previous value.
    pub fn mutate_object(
        &mut self,
        name: &str,
        value: FieldValue,
    ) -> Result<FieldValue, SceneError> {
        let id = self
            .get(name)
            .map(|o| o.id)
            .ok_or_else(|| SceneError::NotFound(name.to_string()))?;
        self.set_field(id, value)
    }

    pub fn set_field(&mut self, id: ObjectId, value: FieldValue) -> Result<FieldValue, SceneError> {
        let value = value.validated()?;
        let index = self
            .index_of_id(id)
            .ok_or_else(|| SceneError::NotFound(id.to_string()))?;
        let obj = &mut self.objects[index];
        let old = obj.field(value.field());
        match value {
            FieldValue::Position(v) => obj.position = v,
            FieldValue::Rotation(v) => obj.rotation = v,
            FieldValue::Scale(v) => obj.scale = v,
            FieldValue::Color(c) => obj.color = c,
            FieldValue::Material(m) => obj.material = m,
        }
        self.commit();
        Ok(old)
    }

    /// The canonical provider-facing object list, byte-deterministic.
    pub fn serialize_parameters(&self) -> String {
        let params: Vec<ObjectParams> = self.objects.iter().map(SceneObject::params).collect();
        serde_json::to_string(&params).expect("parameter list always serializes")
    }

    /// Builds a scene from an object list in parameter form. Ids are assigned in
    /// list order.
    pub fn from_parameters(scene_id: impl Into<String>, text: &str) -> Result<Self, SceneError> {
        let params: Vec<ObjectParams> =
            serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
        let mut scene = SceneGraph::new(scene_id);
        for p in params {
            let spec = NewObject {
                name: p.name,
                position: Vector3::parse(&p.position)?,
                rotation: Vector3::parse(&p.rotation)?,
                scale: Vector3::parse(&p.scale)?,
                color: ColorRGB::from_hex(&p.color)?,
                material: Material::from_stored(&p.material)?,
                asset_ref: None,
            };
            scene.add_object(spec)?;
        }
        scene.revision = 0;
        Ok(scene)
    }

    pub fn snapshot(&self) -> SceneSnapshot {
        SceneSnapshot(self.clone())
    }

    /// Replaces the contents with a snapshot's as one mutation batch. The scene
    /// keeps its own id, its revision only moves forward, and the id counter
    /// never goes back so restored ids cannot collide with future ones.
    pub fn restore_snapshot(&mut self, snap: &SceneSnapshot) -> u64 {
        self.objects = snap.0.objects.clone();
        self.bounds = snap.0.bounds;
        self.next_id = self.next_id.max(snap.0.next_id);
        self.commit()
    }

    fn check_invariants(&self) -> Result<(), SceneError> {
        for (i, obj) in self.objects.iter().enumerate() {
            check_name(&obj.name)?;
            check_scale(obj.scale)?;
            if !obj.position.is_finite() || !obj.rotation.is_finite() {
                return Err(SceneError::Malformed(format!(
                    "object {:?} has non-finite transform",
                    obj.name
                )));
            }
            if obj.rotation.normalized_angles() != obj.rotation {
                return Err(SceneError::Malformed(format!(
                    "object {:?} rotation not in [0, 360)",
                    obj.name
                )));
            }
            if obj.id.0 >= self.next_id {
                return Err(SceneError::Malformed(format!(
                    "object id {} not below next_id {}",
                    obj.id, self.next_id
                )));
            }
            for other in &self.objects[..i] {
                if other.name == obj.name {
                    return Err(SceneError::DuplicateName(obj.name.clone()));
                }
                if other.id == obj.id {
                    return Err(SceneError::Malformed(format!("duplicate id {}", obj.id)));
                }
            }
        }
        Ok(())
    }
}

/// Names must be usable inside `{...}` in action commands.
fn check_name(name: &str) -> Result<(), SceneError> {
    let bad = name.trim().is_empty()
        || name.trim() != name
        || name.contains(['{', '}', '[', ']'])
        || name.chars().any(char::is_control);
    if bad {
        Err(SceneError::InvalidValue(format!(
            "invalid object name {name:?}"
        )))
    } else {
        Ok(())
    }
}

/// Immutable full-value copy of a scene, serializable without loss.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSnapshot(SceneGraph);

impl SceneSnapshot {
    pub fn scene(&self) -> &SceneGraph {
        &self.0
    }

    pub fn revision(&self) -> u64 {
        self.0.revision
    }

    /// A live scene starting from this snapshot's contents and revision.
    pub fn to_scene(&self) -> SceneGraph {
        self.0.clone()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("scene document always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: SceneGraph =
            serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
        scene.check_invariants()?;
        Ok(SceneSnapshot(scene))
    }
}

impl From<SceneGraph> for SceneSnapshot {
    fn from(scene: SceneGraph) -> Self {
        SceneSnapshot(scene)
    }
}
