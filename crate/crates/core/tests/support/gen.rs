//! Scene and action generators shared by the property tests and the
//! acceptance suite.
#![allow(dead_code)]

use echo_core::action::{execute, Action, ActionKind, ExecPolicy, PlannedStep};
use echo_core::scene::{ColorRGB, Field, Material, NewObject, SceneGraph, Vector3};
use proptest::prelude::*;

pub fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vector3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

pub fn color() -> impl Strategy<Value = ColorRGB> {
    any::<(u8, u8, u8)>().prop_map(|(r, g, b)| ColorRGB::new(r, g, b))
}

pub fn material() -> impl Strategy<Value = Material> {
    prop::sample::select(Material::ALL.to_vec())
}

/// One value for every mutable field.
#[derive(Debug, Clone)]
pub struct Values {
    pub position: Vector3,
    pub rotation: Vector3,
    pub scale: Vector3,
    pub multiplier: f64,
    pub color: ColorRGB,
    pub material: Material,
}

pub fn values() -> impl Strategy<Value = Values> {
    (
        vec3(-4.0, 4.0),
        vec3(-720.0, 720.0),
        vec3(0.01, 3.0),
        0.05f64..4.0,
        color(),
        material(),
    )
        .prop_map(
            |(position, rotation, scale, multiplier, color, material)| Values {
                position,
                rotation,
                scale,
                multiplier,
                color,
                material,
            },
        )
}

impl Values {
    pub fn kind_for(&self, field: Field) -> ActionKind {
        match field {
            Field::Position => ActionKind::Move(self.position),
            Field::Rotation => ActionKind::Rotate(self.rotation),
            Field::Scale => ActionKind::Scale(self.multiplier),
            Field::Color => ActionKind::Color(self.color),
            Field::Material => ActionKind::Style(self.material),
        }
    }
}

pub fn build_scene(objects: &[Values]) -> SceneGraph {
    let mut scene = SceneGraph::new("prop");
    for (i, v) in objects.iter().enumerate() {
        let spec = NewObject::new(format!("Obj{i}"))
            .at(v.position)
            .rotated(v.rotation)
            .sized(v.scale)
            .colored(v.color);
        let spec = if i % 3 == 0 {
            spec
        } else {
            spec.styled(v.material)
        };
        scene.add_object(spec).unwrap();
    }
    scene
}

/// A scene with 1..=max objects `Obj0`, `Obj1`, ...
pub fn scene(max: usize) -> impl Strategy<Value = SceneGraph> {
    prop::collection::vec(values(), 1..=max).prop_map(|v| build_scene(&v))
}

/// An action shape whose target is picked once the live objects are known.
#[derive(Debug, Clone)]
pub enum Choice {
    Add(Vector3),
    Set(usize, u8, Values),
    Destroy(usize),
}

pub fn choice() -> impl Strategy<Value = Choice> {
    prop_oneof![
        2 => vec3(-4.0, 4.0).prop_map(Choice::Add),
        7 => (any::<usize>(), 0u8..5, values()).prop_map(|(i, f, v)| Choice::Set(i, f, v)),
        1 => any::<usize>().prop_map(Choice::Destroy),
    ]
}

/// Turns choices into steps that are all valid when run in order on `scene`.
pub fn realize(scene: &SceneGraph, choices: &[Choice]) -> Vec<PlannedStep> {
    let mut sim = scene.clone();
    let mut steps = Vec::new();
    let mut fresh = 0;
    for c in choices {
        let action = match c {
            Choice::Add(at) => {
                fresh += 1;
                Action::new(format!("New{fresh}"), ActionKind::Add(*at))
            }
            _ if sim.is_empty() => continue,
            Choice::Set(i, f, v) => {
                let target = sim.objects()[i % sim.len()].name.clone();
                Action::new(target, v.kind_for(Field::ALL[*f as usize]))
            }
            Choice::Destroy(i) => Action::new(
                sim.objects()[i % sim.len()].name.clone(),
                ActionKind::Destroy,
            ),
        };
        let step = PlannedStep::new(action);
        execute(&mut sim, &step, ExecPolicy::default()).expect("realized steps are valid");
        steps.push(step);
    }
    steps
}

/// A scene and up to `max_steps` steps valid on it.
pub fn scene_and_steps(
    max_objects: usize,
    max_steps: usize,
) -> impl Strategy<Value = (SceneGraph, Vec<PlannedStep>)> {
    (
        scene(max_objects),
        prop::collection::vec(choice(), 0..=max_steps),
    )
        .prop_map(|(s, c)| {
            let steps = realize(&s, &c);
            (s, steps)
        })
}

/// Two step lists whose (object, field) footprints do not overlap.
#[derive(Debug, Clone)]
pub struct DisjointPair {
    pub scene: SceneGraph,
    pub a: Vec<PlannedStep>,
    pub b: Vec<PlannedStep>,
    pub a_touches: Vec<(String, Field)>,
    pub b_touches: Vec<(String, Field)>,
}

pub fn disjoint_pair() -> impl Strategy<Value = DisjointPair> {
    prop::collection::vec(values(), 2..=12)
        .prop_flat_map(|objects| {
            let n = objects.len();
            (
                Just(objects),
                prop::collection::vec((0u8..3, 0u8..5, values()), n * 2),
                prop::collection::vec(vec3(-4.0, 4.0), 0..3),
                prop::collection::vec(vec3(-4.0, 4.0), 0..3),
            )
        })
        .prop_map(|(objects, picks, adds_a, adds_b)| {
            let n = objects.len();
            let mut sides: [(Vec<PlannedStep>, Vec<(String, Field)>); 2] = Default::default();
            // Each object is claimed by at most one side.
            let mut owner = vec![0u8; n];
            for (k, (side, field, v)) in picks.iter().enumerate() {
                let obj = k % n;
                if *side == 0 || (owner[obj] != 0 && owner[obj] != *side) {
                    continue;
                }
                owner[obj] = *side;
                let name = format!("Obj{obj}");
                let f = Field::ALL[*field as usize];
                let (steps, touches) = &mut sides[*side as usize - 1];
                steps.push(PlannedStep::new(Action::new(name.clone(), v.kind_for(f))));
                if !touches.contains(&(name.clone(), f)) {
                    touches.push((name, f));
                }
            }
            // Some claimed objects are then destroyed by their owner, which
            // puts every field of the object in that owner's footprint.
            for (obj, side) in owner.iter().enumerate() {
                if *side == 0 || obj % 4 != 3 {
                    continue;
                }
                let name = format!("Obj{obj}");
                let (steps, touches) = &mut sides[*side as usize - 1];
                steps.push(PlannedStep::new(Action::new(
                    name.clone(),
                    ActionKind::Destroy,
                )));
                for f in Field::ALL {
                    if !touches.contains(&(name.clone(), f)) {
                        touches.push((name.clone(), f));
                    }
                }
            }
            for (i, (prefix, adds)) in [("A", adds_a), ("B", adds_b)].into_iter().enumerate() {
                let (steps, touches) = &mut sides[i];
                let adds = if adds.is_empty() && steps.is_empty() {
                    vec![Vector3::ZERO]
                } else {
                    adds
                };
                for (j, at) in adds.into_iter().enumerate() {
                    let name = format!("{prefix}_New{j}");
                    steps.insert(
                        0,
                        PlannedStep::new(Action::new(name.clone(), ActionKind::Add(at))),
                    );
                    touches.extend(Field::ALL.map(|f| (name.clone(), f)));
                }
            }
            let [(a, a_touches), (b, b_touches)] = sides;
            DisjointPair {
                scene: build_scene(&objects),
                a,
                b,
                a_touches,
                b_touches,
            }
        })
}

/// The values at `touches`, as exact text; absent objects read as `None`.
pub fn footprint(scene: &SceneGraph, touches: &[(String, Field)]) -> Vec<String> {
    touches
        .iter()
        .map(|(name, f)| {
            format!(
                "{name}.{}={:?}",
                f.name(),
                scene.get(name).map(|o| o.field(*f))
            )
        })
        .collect()
}

/// Valid steps with one step targeting a missing object spliced in at `k`.
#[derive(Debug, Clone)]
pub struct BrokenPlan {
    pub scene: SceneGraph,
    pub steps: Vec<PlannedStep>,
    pub failing_step: usize,
}

pub fn broken_plan() -> impl Strategy<Value = BrokenPlan> {
    (scene_and_steps(12, 8), any::<usize>(), vec3(-4.0, 4.0)).prop_map(
        |((scene, mut steps), k, at)| {
            let failing_step = k % (steps.len() + 1);
            steps.insert(
                failing_step,
                PlannedStep::new(Action::new("Missing_Object", ActionKind::Move(at))),
            );
            BrokenPlan {
                scene,
                steps,
                failing_step,
            }
        },
    )
}
