//! Ready-made scripted scenes: the five-step dishwash task, random
//! pick-and-place demos and the wrist-flip placement.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact_analysis::ContactLocation;
use crate::execution_sim::{SceneSpec, SCENE_VERSION};
use crate::geometry::{CollisionModel, ConvexShape, GeometryError, PointCloud, Pose};
use crate::motion_planning::{in_collision, JointConfig, KinematicChain, Scene, SceneObject};
use crate::primitive_learning::{
    BreakContactParams, MakeContactParams, ObjectModel, Policy, Primitive, PrimitiveKind, PrimitiveParams,
};
use crate::scenario::{FaucetSpec, HandSpec, PlacedObject, ScenarioSpec, ScriptEvent, SCENARIO_VERSION};
use crate::shapes::{bowl, ObjectSpec, Shape, ShapePart};

pub const SINK: &str = "sink";
pub const OUTLET: &str = "outlet";
pub const FAUCET: &str = "faucet";
pub const WATER: &str = "water";
pub const BOWL: &str = "bowl";

/// Water jet radius under the outlet mouth.
pub const WATER_RADIUS: f64 = 0.012;

fn cuboid(c: [f64; 3], h: [f64; 3]) -> ShapePart {
    ShapePart::at(Shape::Box { half_extents: h }, c[0], c[1], c[2])
}

fn placed(spec: ObjectSpec, pose: Pose) -> PlacedObject {
    PlacedObject { spec, pose, initially_present: true }
}

/// Sink basin; model origin at the centre of the floor's top face.
pub fn sink_spec() -> ObjectSpec {
    let (w, h, t) = (0.24, 0.085, 0.01);
    let mut o = ObjectSpec::new(
        SINK,
        vec![
            cuboid([0.0, 0.0, -t], [w, w, t]),
            cuboid([-(w - t), 0.0, h - 2.0 * t], [t, w, h]),
            cuboid([w - t, 0.0, h - 2.0 * t], [t, w, h]),
            cuboid([0.0, -(w - t), h - 2.0 * t], [w, t, h]),
            cuboid([0.0, w - t, h - 2.0 * t], [w, t, h]),
        ],
    );
    o.density = 3000.0;
    o
}

/// Spout with its post; model origin at the mouth, water leaves along -z.
pub fn outlet_spec() -> ObjectSpec {
    let mut o = ObjectSpec::new(
        OUTLET,
        vec![cuboid([0.07, 0.0, 0.02], [0.09, 0.015, 0.02]), cuboid([0.15, 0.0, -0.08], [0.012, 0.012, 0.12])],
    );
    o.density = 8000.0;
    o
}

/// Lever arm; model origin at the hinge, arm pointing along -x.
pub fn lever_spec() -> ObjectSpec {
    let mut o = ObjectSpec::new(FAUCET, vec![cuboid([-0.035, 0.0, 0.01], [0.035, 0.008, 0.01])]);
    // small and thin: dense sampling keeps the roll about its long axis observable
    o.density = 100_000.0;
    o
}

pub fn water_spec(length: f64) -> ObjectSpec {
    let mut o = ObjectSpec::new(WATER, vec![ShapePart::new(Shape::Cylinder { radius: WATER_RADIUS, height: length })]);
    o.solid = false;
    o.density = 60_000.0;
    o.symmetry_axis = Some([0.0, 0.0, 1.0]);
    o
}

/// Bowl of the demonstration, `scale` 1; other scales give unseen bowls.
pub fn bowl_spec(scale: f64) -> ObjectSpec {
    let mut o = ObjectSpec::new(BOWL, vec![ShapePart::new(bowl(0.04 * scale, 0.075 * scale, 0.055 * scale))]);
    o.symmetry_axis = Some([0.0, 0.0, 1.0]);
    o
}

/// Placement of the dishwash objects for one execution or demo variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DishwashLayout {
    /// Shift of the sink, outlet and lever together (x, y).
    pub sink_offset: [f64; 2],
    /// Bowl position on the sink floor relative to the sink origin.
    pub bowl_at: [f64; 2],
    pub bowl_scale: f64,
}

impl Default for DishwashLayout {
    fn default() -> Self {
        DishwashLayout { sink_offset: [0.0, 0.0], bowl_at: [-0.07, 0.08], bowl_scale: 1.0 }
    }
}

pub const SINK_ORIGIN: [f64; 3] = [0.52, 0.0, -0.15];
/// Outlet mouth relative to the sink origin.
pub const MOUTH: [f64; 3] = [0.10, 0.0, 0.35];
/// Lever hinge relative to the sink origin.
pub const HINGE: [f64; 3] = [0.18, 0.0, 0.39];
/// Lever rotation that turns the water on.
pub const LEVER_ON: f64 = PI / 4.0;
pub const LEVER_THRESHOLD: f64 = PI / 6.0;
/// Height of the jet's lower end above the sink origin.
pub const JET_END: f64 = 0.15;

impl DishwashLayout {
    pub fn sink_pose(&self) -> Pose {
        Pose::from_translation(SINK_ORIGIN[0] + self.sink_offset[0], SINK_ORIGIN[1] + self.sink_offset[1], SINK_ORIGIN[2])
    }

    fn at_sink(&self, p: [f64; 3]) -> Pose {
        self.sink_pose() * Pose::from_translation(p[0], p[1], p[2])
    }

    pub fn objects(&self) -> Vec<PlacedObject> {
        let mut water = placed(water_spec(MOUTH[2] - JET_END), self.at_sink([MOUTH[0], MOUTH[1], JET_END]));
        water.initially_present = false;
        vec![
            placed(sink_spec(), self.sink_pose()),
            placed(outlet_spec(), self.at_sink(MOUTH)),
            placed(lever_spec(), self.at_sink(HINGE)),
            water,
            placed(bowl_spec(self.bowl_scale), self.at_sink([self.bowl_at[0], self.bowl_at[1], 0.0])),
        ]
    }

    pub fn faucet(&self) -> FaucetSpec {
        FaucetSpec { lever: FAUCET.into(), outlet: OUTLET.into(), water: WATER.into(), on_angle: LEVER_THRESHOLD, axis: [0.0, 0.0, 1.0] }
    }
}

impl DishwashLayout {
    /// Execution scene for this layout, water off.
    pub fn scene(&self) -> SceneSpec {
        SceneSpec { version: SCENE_VERSION, objects: self.objects(), faucet: Some(self.faucet()), robot_home: None }
    }
}

/// Where the demonstrated bowl is put down, relative to the sink origin.
pub const PLACE_AT: [f64; 2] = [-0.07, -0.10];

/// Evaluation conditions, one per row of the success table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// The demonstrated layout and bowl.
    Nominal,
    /// Sink shifted up to 5 cm, bowl moved up to 15 cm on the sink floor.
    Displaced,
    /// A bowl 85 to 115 % of the demonstrated size.
    UnseenBowl,
    /// Displaced and a differently sized bowl.
    Combined,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Nominal, Variant::Displaced, Variant::UnseenBowl, Variant::Combined];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Nominal => "nominal",
            Variant::Displaced => "displaced",
            Variant::UnseenBowl => "unseen-bowl",
            Variant::Combined => "displaced+unseen-bowl",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.label() == s || format!("{v:?}").eq_ignore_ascii_case(s))
    }
}

/// Random layout for `variant`; deterministic in `seed`.
pub fn dishwash_layout(variant: Variant, seed: u64) -> DishwashLayout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD15_4A5);
    let mut lay = DishwashLayout::default();
    let displace = matches!(variant, Variant::Displaced | Variant::Combined);
    if matches!(variant, Variant::UnseenBowl | Variant::Combined) {
        // never the demonstrated size itself
        let s: f64 = rng.gen_range(0.05..0.15);
        lay.bowl_scale = if rng.gen_bool(0.5) { 1.0 - s } else { 1.0 + s };
    }
    if displace {
        lay.sink_offset = [rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)];
        // keep the bowl on the floor and clear of its put-down spot
        let r = 0.075 * lay.bowl_scale;
        let limit = 0.22 - r - 0.01;
        let base = DishwashLayout::default().bowl_at;
        loop {
            let (d, a) = (rng.gen_range(0.0..0.15f64), rng.gen_range(-PI..PI));
            let at = [base[0] + d * a.cos(), base[1] + d * a.sin()];
            let clear = ((at[0] - PLACE_AT[0]).powi(2) + (at[1] - PLACE_AT[1]).powi(2)).sqrt() > 2.0 * r + 0.02;
            if at.iter().all(|c| c.abs() <= limit) && clear {
                lay.bowl_at = at;
                break;
            }
        }
    }
    lay
}

/// Lever tip, touched from above.
const LEVER_GRIP: [f64; 3] = [-0.062, 0.0, 0.02];
/// Front rim of the bowl, approached from above and outside.
fn bowl_grip(scale: f64) -> ([f64; 3], [f64; 3]) {
    ([-0.075 * scale, 0.0, 0.055 * scale], [0.243, 0.0, -0.97])
}

/// Faucet on, pick the bowl, rinse it under the jet, place it, faucet off.
pub fn dishwash_spec(seed: u64) -> ScenarioSpec {
    let lay = DishwashLayout::default();
    let s = lay.sink_pose();
    let w = |x: f64, y: f64, z: f64| s * Pose::from_translation(x, y, z);
    let hinge = s.transform_point(&HINGE.into());
    let lift = 0.06;
    let under = [MOUTH[0], MOUTH[1]];
    // bottom 3 mm below the jet end: touching the water
    let rinse_z = JET_END - 0.003;
    let place = PLACE_AT;
    let (grip, approach) = bowl_grip(1.0);
    let mv = |start, end, to| ScriptEvent::Move { object: BOWL.into(), start, end, to };
    let events = vec![
        ScriptEvent::Touch { object: FAUCET.into(), touch: 20, release: 50, location: LEVER_GRIP, approach: [0.0, 0.0, -1.0] },
        ScriptEvent::Rotate {
            object: FAUCET.into(),
            start: 24,
            end: 38,
            pivot: hinge.into(),
            axis: [0.0, 0.0, 1.0],
            angle: LEVER_ON,
        },
        ScriptEvent::HandAt { frame: 65, position: [0.35, 0.15, 0.3] },
        ScriptEvent::Touch { object: BOWL.into(), touch: 80, release: 190, location: grip, approach },
        mv(84, 88, w(lay.bowl_at[0], lay.bowl_at[1], lift)),
        mv(90, 108, w(under[0], under[1], lift)),
        mv(110, 116, w(under[0], under[1], rinse_z)),
        mv(146, 152, w(under[0], under[1], lift)),
        mv(154, 174, w(place[0], place[1], lift)),
        mv(176, 180, w(place[0], place[1], 0.0)),
        ScriptEvent::HandAt { frame: 205, position: [0.35, 0.15, 0.3] },
        ScriptEvent::Touch { object: FAUCET.into(), touch: 220, release: 250, location: LEVER_GRIP, approach: [0.0, 0.0, -1.0] },
        ScriptEvent::Rotate {
            object: FAUCET.into(),
            start: 224,
            end: 238,
            pivot: hinge.into(),
            axis: [0.0, 0.0, 1.0],
            angle: -LEVER_ON,
        },
    ];
    ScenarioSpec {
        version: SCENARIO_VERSION,
        frame_rate: 30.0,
        frames: 270,
        noise_sigma: 0.0005,
        seed,
        objects: lay.objects(),
        events,
        hand: HandSpec::default(),
        faucet: Some(lay.faucet()),
        contact_threshold: 0.0075,
    }
}

/// Table top; model origin at the centre of its top face.
pub fn table_spec() -> ObjectSpec {
    let mut o = ObjectSpec::new(TABLE, vec![cuboid([0.0, 0.0, -0.01], [0.3, 0.3, 0.01])]);
    o.density = 3000.0;
    o
}

fn random_object<R: Rng>(name: &str, rng: &mut R) -> ObjectSpec {
    match rng.gen_range(0..3) {
        0 => ObjectSpec::new(
            name,
            vec![cuboid([0.0, 0.0, 0.0], [rng.gen_range(0.02..0.04), rng.gen_range(0.02..0.04), rng.gen_range(0.02..0.04)])],
        ),
        1 => {
            let mut o = ObjectSpec::new(
                name,
                vec![ShapePart::new(Shape::Cylinder { radius: rng.gen_range(0.025..0.04), height: rng.gen_range(0.05..0.1) })],
            );
            o.symmetry_axis = Some([0.0, 0.0, 1.0]);
            o
        }
        _ => {
            let r = rng.gen_range(0.05..0.07);
            let mut o = ObjectSpec::new(name, vec![ShapePart::new(bowl(0.6 * r, r, 0.7 * r))]);
            o.symmetry_axis = Some([0.0, 0.0, 1.0]);
            o
        }
    }
}

/// Resting height of the model origin above a support surface.
fn rest_height(o: &ObjectSpec) -> f64 {
    match &o.parts[0].shape {
        Shape::Box { half_extents } => half_extents[2],
        _ => 0.0,
    }
}

/// 1 to 3 objects moved around a table one after another, 100 to 600 frames.
pub fn pick_place_spec(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=3usize);
    let frames = rng.gen_range(100..=600usize);
    let table = Pose::from_translation(0.5, 0.0, 0.0);
    let mut objects = vec![placed(table_spec(), table)];
    // well-separated slots on the table, shuffled
    let mut slots: Vec<[f64; 2]> =
        vec![[-0.18, -0.18], [-0.18, 0.18], [0.18, -0.18], [0.18, 0.18], [0.0, -0.2], [0.0, 0.2], [-0.2, 0.0], [0.2, 0.0]];
    for i in (1..slots.len()).rev() {
        let j = rng.gen_range(0..=i);
        slots.swap(i, j);
    }
    let mut specs = Vec::new();
    for i in 0..count {
        let o = random_object(&format!("obj{i}"), &mut rng);
        let z = rest_height(&o);
        let [x, y] = slots[i];
        objects.push(placed(o.clone(), table * Pose::from_translation(x, y, z)));
        specs.push((o, z));
    }
    // one touch per object, evenly spread over the demo
    let budget = frames / count;
    let mut events = Vec::new();
    for (i, (o, z)) in specs.iter().enumerate() {
        let base = i * budget;
        let touch = base + budget / 5 + rng.gen_range(0..=budget / 10);
        let release = base + budget - budget / 5 - rng.gen_range(0..=budget / 10);
        let (location, approach) = grip_of(o);
        events.push(ScriptEvent::Touch { object: o.name.clone(), touch, release, location, approach });
        let [x, y] = slots[count + i];
        let [x0, y0] = slots[i];
        let lift = 0.15;
        let span = release - touch;
        let (a, b, c, d) = (touch + 2, touch + 2 + span / 5, release - 2 - span / 5, release - 2);
        let t = |x: f64, y: f64, h: f64| table * Pose::from_translation(x, y, z + h);
        events.push(ScriptEvent::Move { object: o.name.clone(), start: a, end: (a + 4).min(b), to: t(x0, y0, lift) });
        events.push(ScriptEvent::Move { object: o.name.clone(), start: b.max(a + 5), end: c, to: t(x, y, lift) });
        events.push(ScriptEvent::Move { object: o.name.clone(), start: c + 1, end: d.max(c + 2), to: t(x, y, 0.0) });
    }
    ScenarioSpec {
        version: SCENARIO_VERSION,
        frame_rate: 30.0,
        frames,
        noise_sigma: 0.0005,
        seed,
        objects,
        events,
        hand: HandSpec::default(),
        faucet: None,
        contact_threshold: 0.0075,
    }
}

/// Grasp location and approach: top of boxes and cylinders, front rim of bowls.
pub fn grip_of(o: &ObjectSpec) -> ([f64; 3], [f64; 3]) {
    match &o.parts[0].shape {
        Shape::Box { half_extents } => ([0.0, 0.0, half_extents[2]], [0.0, 0.0, -1.0]),
        Shape::Cylinder { height, .. } => ([0.0, 0.0, *height], [0.0, 0.0, -1.0]),
        Shape::Lathe { profile, .. } => {
            let [r, h] = profile[profile.len() - 1];
            ([-r, 0.0, h], [0.243, 0.0, -0.97])
        }
        Shape::Sphere { radius } => ([0.0, 0.0, *radius], [0.0, 0.0, -1.0]),
    }
}

pub const CAN: &str = "can";
pub const WALL: &str = "wall";
pub const TABLE: &str = "table";

/// Upright cylinder, symmetric about its axis.
pub fn can_spec() -> ObjectSpec {
    let mut o = ObjectSpec::new(CAN, vec![ShapePart::new(Shape::Cylinder { radius: 0.03, height: 0.12 })]);
    o.symmetry_axis = Some([0.0, 0.0, 1.0]);
    o
}

/// Learned-model stand-in built straight from analytic geometry.
pub fn object_model(spec: &ObjectSpec, seed: u64) -> Result<ObjectModel, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud = PointCloud::new(spec.name.clone(), spec.sample_surface(spec.sample_count(), &mut rng));
    Ok(ObjectModel { cloud, collision: spec.collision_model()?, symmetry_axis: spec.symmetry() })
}

/// Gap between the placed can and the wall: room for a hand, not for the gripper.
pub const WALL_GAP: f64 = 0.045;

/// A can grasped from its -y side must be put down with a wall on that
/// side. The demonstrated orientation leaves the gripper inside the wall;
/// turning the can about its axis frees it. Primitive 0 picks, 1 places.
pub fn wrist_flip(seed: u64) -> Result<(SceneSpec, Policy), GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = Pose::from_translation(0.5, 0.0, 0.0);
    let start = [rng.gen_range(-0.1..0.0), rng.gen_range(0.1..0.2)];
    let place = [rng.gen_range(-0.1..0.05), rng.gen_range(-0.15..-0.05)];
    let can = can_spec();
    let r = 0.03;
    let mut wall = ObjectSpec::new(WALL, vec![cuboid([0.0, 0.0, 0.1], [0.1, 0.01, 0.1])]);
    wall.density = 10_000.0;
    let wall_y = place[1] - r - WALL_GAP - 0.01;
    let objects = vec![
        placed(table_spec(), table),
        placed(can.clone(), table * Pose::from_translation(start[0], start[1], 0.0)),
        placed(wall.clone(), table * Pose::from_translation(place[0], wall_y, 0.0)),
    ];
    let scene = SceneSpec { version: SCENE_VERSION, objects, faucet: None, robot_home: None };
    let grip = ContactLocation { point: Point3::new(0.0, -r, 0.07), support: 50 };
    let primitives = vec![
        Primitive {
            kind: PrimitiveKind::MakeContact,
            target: CAN.into(),
            span: (10, 10),
            params: PrimitiveParams::Make(MakeContactParams {
                locations: vec![grip],
                approaches: vec![Vector3::y()],
                manual_override: None,
            }),
        },
        Primitive {
            kind: PrimitiveKind::BreakContact,
            target: CAN.into(),
            span: (60, 60),
            params: PrimitiveParams::Break(BreakContactParams {
                reference: TABLE.into(),
                final_pose: Pose::from_translation(place[0], place[1], 0.0),
                manual_override: None,
            }),
        },
    ];
    let mut object_models = BTreeMap::new();
    for (i, o) in [table_spec(), can, wall].iter().enumerate() {
        object_models.insert(o.name.clone(), object_model(o, seed.wrapping_add(i as u64))?);
    }
    Ok((scene, Policy { frame_rate: 30.0, primitives, object_models }))
}

/// A planning problem: floor, 8 to 16 random boxes around the arm, and
/// collision-free start and goal configurations.
pub fn cluttered_scene(chain: &KinematicChain, seed: u64) -> (Scene, JointConfig, JointConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxed = |name: String, c: [f64; 3], h: [f64; 3]| SceneObject {
        name,
        model: CollisionModel::single(ConvexShape::cuboid(Point3::origin(), Vector3::from(h))),
        pose: Pose::from_translation(c[0], c[1], c[2]),
        solid: true,
    };
    let mut objects = vec![boxed("floor".into(), [0.0, 0.0, -0.06], [1.5, 1.5, 0.05])];
    let n = rng.gen_range(8..=16);
    while objects.len() <= n {
        let c: [f64; 3] = [rng.gen_range(-0.3..0.8), rng.gen_range(-0.7..0.7), rng.gen_range(0.0..0.9)];
        // leave the base column clear
        if (c[0] * c[0] + c[1] * c[1]).sqrt() < 0.3 {
            continue;
        }
        let h = [rng.gen_range(0.03..0.12), rng.gen_range(0.03..0.12), rng.gen_range(0.03..0.2)];
        objects.push(boxed(format!("box{}", objects.len()), c, h));
    }
    let scene = Scene::with_objects(objects);
    let mut free = || loop {
        let q: JointConfig = chain.joints.iter().map(|j| rng.gen_range(j.limits.0..=j.limits.1)).collect();
        if !in_collision(chain, &q, &scene) {
            return q;
        }
    };
    let (start, goal) = (free(), free());
    (scene, start, goal)
}
