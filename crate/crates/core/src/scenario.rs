//! Scripted synthetic demonstrations with exact ground truth.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::demonstration::{DemoMeta, Demonstration, Frame, HAND};
use crate::geometry::kdtree::KdTree;
use crate::geometry::{PointCloud, Pose};
use crate::primitive_learning::PrimitiveKind;
use crate::shapes::ObjectSpec;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    #[serde(flatten)]
    pub spec: ObjectSpec,
    pub pose: Pose,
    /// Absent until an `appear` event when false.
    #[serde(default = "yes")]
    pub initially_present: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScriptEvent {
    /// Linear translation and slerp from the pose at `start` to `to`.
    Move { object: String, start: usize, end: usize, to: Pose },
    /// Rotation by `angle` about the world line through `pivot` along `axis`.
    Rotate { object: String, start: usize, end: usize, pivot: [f64; 3], axis: [f64; 3], angle: f64 },
    /// Hand holds `location` (model frame) from `touch` to `release`
    /// inclusive, arriving along `approach` (model frame).
    Touch { object: String, touch: usize, release: usize, location: [f64; 3], approach: [f64; 3] },
    /// Free hand keyframe.
    HandAt { frame: usize, position: [f64; 3] },
    Appear { object: String, frame: usize },
    Disappear { object: String, frame: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandSpec {
    pub radius: f64,
    pub points: usize,
    pub start: [f64; 3],
    /// Frames spent on the straight final approach and on the retreat.
    pub approach_frames: usize,
    pub approach_step: f64,
    /// How far the blob surface sinks into the held surface.
    pub penetration: f64,
}

impl Default for HandSpec {
    fn default() -> Self {
        HandSpec { radius: 0.02, points: 250, start: [0.3, 0.3, 0.4], approach_frames: 6, approach_step: 0.015, penetration: 0.003 }
    }
}

/// A lever hinged on its outlet; turning it past `on_angle` switches on a
/// water jet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaucetSpec {
    pub lever: String,
    pub outlet: String,
    pub water: String,
    pub on_angle: f64,
    /// Hinge axis in the outlet frame.
    #[serde(default = "up")]
    pub axis: [f64; 3],
}

fn up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl FaucetSpec {
    /// Lever rotation about the hinge axis away from its rest placement;
    /// wobble about other axes is ignored.
    pub fn lever_angle(&self, rest: &Pose, outlet: &Pose, lever: &Pose) -> f64 {
        let d = rest.rotation.inverse() * outlet.relative(lever).rotation;
        let axis = rest.rotation.inverse() * Vector3::from(self.axis).normalize();
        let twist = 2.0 * d.imag().dot(&axis).atan2(d.scalar());
        let twist = (twist + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        twist.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub version: u32,
    pub frame_rate: f64,
    pub frames: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub objects: Vec<PlacedObject>,
    pub events: Vec<ScriptEvent>,
    #[serde(default)]
    pub hand: HandSpec,
    #[serde(default)]
    pub faucet: Option<FaucetSpec>,
    /// Surface distance below which the truth records contact.
    #[serde(default = "default_threshold")]
    pub contact_threshold: f64,
}

fn default_threshold() -> f64 {
    0.0075
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid script: {0}")]
    InvalidScript(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthPrimitive {
    pub kind: PrimitiveKind,
    pub target: String,
    pub span: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStates {
    pub pair: (String, String),
    pub states: Vec<bool>,
}

/// Ground truth for a generated demonstration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub poses: BTreeMap<String, Vec<Option<Pose>>>,
    pub hand_contacts: BTreeMap<String, Vec<bool>>,
    pub object_contacts: Vec<PairStates>,
    pub primitives: Vec<TruthPrimitive>,
}

impl Truth {
    pub fn contact_set(&self, frame: usize) -> BTreeSet<(String, String)> {
        self.object_contacts.iter().filter(|p| p.states[frame]).map(|p| p.pair.clone()).collect()
    }
}

impl ScenarioSpec {
    pub fn object(&self, name: &str) -> Option<&PlacedObject> {
        self.objects.iter().find(|o| o.spec.name == name)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidScript(m));
        if self.version != SCENARIO_VERSION {
            return bad(format!("version {} (supported: {SCENARIO_VERSION})", self.version));
        }
        if !(self.frame_rate > 0.0) || self.frames == 0 || !(self.noise_sigma >= 0.0) {
            return bad("frame_rate and frames must be positive, noise_sigma non-negative".into());
        }
        let mut names = BTreeSet::new();
        for o in &self.objects {
            if o.spec.name == HAND || !names.insert(o.spec.name.as_str()) {
                return bad(format!("duplicate or reserved object name '{}'", o.spec.name));
            }
        }
        let known = |n: &str| names.contains(n);
        let mut touches = Vec::new();
        for e in &self.events {
            match e {
                ScriptEvent::Move { object, start, end, .. } | ScriptEvent::Rotate { object, start, end, .. } => {
                    if !known(object) || end <= start || *end >= self.frames {
                        return bad(format!("motion of '{object}' over {start}..{end} is invalid"));
                    }
                }
                ScriptEvent::Touch { object, touch, release, approach, .. } => {
                    if !known(object) || release < touch || *release >= self.frames {
                        return bad(format!("touch of '{object}' over {touch}..{release} is invalid"));
                    }
                    if Vector3::from(*approach).norm() < 1e-9 {
                        return bad(format!("touch of '{object}' has a zero approach"));
                    }
                    touches.push((*touch, *release, object.as_str()));
                }
                ScriptEvent::HandAt { frame, .. } => {
                    if *frame >= self.frames {
                        return bad(format!("hand keyframe {frame} beyond the last frame"));
                    }
                }
                ScriptEvent::Appear { object, frame } | ScriptEvent::Disappear { object, frame } => {
                    if !known(object) || *frame >= self.frames {
                        return bad(format!("presence event for '{object}' at {frame} is invalid"));
                    }
                }
            }
        }
        touches.sort();
        for w in touches.windows(2) {
            if w[1].0 <= w[0].1 {
                return bad(format!("hand events overlap: '{}' and '{}'", w[0].2, w[1].2));
            }
        }
        if let Some(f) = &self.faucet {
            for n in [&f.lever, &f.outlet, &f.water] {
                if !known(n) {
                    return bad(format!("faucet refers to unknown object '{n}'"));
                }
            }
        }
        Ok(())
    }
}

/// True per-frame poses and presence of every object.
fn simulate(spec: &ScenarioSpec) -> BTreeMap<String, Vec<Option<Pose>>> {
    let n = spec.frames;
    let mut poses: BTreeMap<String, Vec<Pose>> = BTreeMap::new();
    let mut present: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for o in &spec.objects {
        poses.insert(o.spec.name.clone(), vec![o.pose; n]);
        present.insert(o.spec.name.clone(), vec![o.initially_present; n]);
    }
    for f in 1..n {
        for (name, track) in poses.iter_mut() {
            let mut p = track[f - 1];
            for e in &spec.events {
                match e {
                    ScriptEvent::Move { object, start, end, to } if object == name && *start < f && f <= *end => {
                        let u = (f - start) as f64 / (end - start) as f64;
                        let from = track[*start];
                        p = Pose::new(
                            from.rotation.slerp(&to.rotation, u),
                            from.translation + (to.translation - from.translation) * u,
                        );
                    }
                    ScriptEvent::Rotate { object, start, end, pivot, axis, angle } if object == name && *start < f && f <= *end => {
                        let u = (f - start) as f64 / (end - start) as f64;
                        p = Pose::rotation_about(&Point3::from(*pivot), &Vector3::from(*axis), angle * u) * track[*start];
                    }
                    _ => {}
                }
            }
            track[f] = p;
        }
        for (name, flags) in present.iter_mut() {
            flags[f] = flags[f - 1];
            for e in &spec.events {
                match e {
                    ScriptEvent::Appear { object, frame } if object == name && *frame == f => flags[f] = true,
                    ScriptEvent::Disappear { object, frame } if object == name && *frame == f => flags[f] = false,
                    _ => {}
                }
            }
        }
    }
    if let Some(fc) = &spec.faucet {
        let rest = poses[&fc.outlet][0].relative(&poses[&fc.lever][0]);
        let flags: Vec<bool> =
            (0..n).map(|f| fc.lever_angle(&rest, &poses[&fc.outlet][f], &poses[&fc.lever][f]) > fc.on_angle).collect();
        present.insert(fc.water.clone(), flags);
    }
    poses
        .into_iter()
        .map(|(k, track)| {
            let flags = &present[&k];
            let v = track.into_iter().zip(flags).map(|(p, on)| on.then_some(p)).collect();
            (k, v)
        })
        .collect()
}

fn hand_centers(spec: &ScenarioSpec, poses: &BTreeMap<String, Vec<Option<Pose>>>) -> Vec<Point3<f64>> {
    let h = &spec.hand;
    let n = spec.frames;
    let mut anchors: Vec<(usize, Point3<f64>)> = Vec::new();
    let mut fixed: Vec<Option<Point3<f64>>> = vec![None; n];
    let offset = h.radius - h.penetration;
    for e in &spec.events {
        match e {
            ScriptEvent::HandAt { frame, position } => anchors.push((*frame, Point3::from(*position))),
            ScriptEvent::Touch { object, touch, release, location, approach } => {
                let track = &poses[object];
                let loc = Point3::from(*location);
                let a = Vector3::from(*approach).normalize();
                let center = |f: usize| {
                    let p = track[f].unwrap_or_else(|| track.iter().flatten().next().copied().unwrap_or_default());
                    (p.transform_point(&(loc - a * offset)), p.transform_vector(&a))
                };
                for (f, slot) in fixed.iter_mut().enumerate().take(release + 1).skip(*touch) {
                    *slot = Some(center(f).0);
                }
                let (c0, a0) = center(*touch);
                for k in 1..=h.approach_frames {
                    if let Some(f) = touch.checked_sub(k) {
                        fixed[f] = Some(c0 - a0 * (k as f64 * h.approach_step));
                    }
                }
                if let Some(f) = touch.checked_sub(h.approach_frames) {
                    anchors.push((f, c0 - a0 * (h.approach_frames as f64 * h.approach_step)));
                }
                let (c1, a1) = center(*release);
                for k in 1..=h.approach_frames {
                    if release + k < n {
                        fixed[release + k] = Some(c1 - a1 * (k as f64 * h.approach_step));
                    }
                }
                if release + h.approach_frames < n {
                    anchors.push((release + h.approach_frames, c1 - a1 * (h.approach_frames as f64 * h.approach_step)));
                }
            }
            _ => {}
        }
    }
    if !anchors.iter().any(|a| a.0 == 0) && fixed[0].is_none() {
        anchors.push((0, Point3::from(h.start)));
    }
    anchors.sort_by_key(|a| a.0);
    (0..n)
        .map(|f| {
            if let Some(c) = fixed[f] {
                return c;
            }
            let before = anchors.iter().rev().find(|a| a.0 <= f);
            let after = anchors.iter().find(|a| a.0 >= f);
            match (before, after) {
                (Some(b), Some(a)) if a.0 > b.0 => b.1 + (a.1 - b.1) * ((f - b.0) as f64 / (a.0 - b.0) as f64),
                (Some(b), _) => b.1,
                (None, Some(a)) => a.1,
                (None, None) => Point3::from(h.start),
            }
        })
        .collect()
}

fn min_dist(a: &[Point3<f64>], tree: &KdTree) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        if let Some((_, d2)) = tree.nearest_within(p, best) {
            best = d2;
        }
    }
    best.sqrt()
}

/// Renders the scripted scene into noisy per-frame clouds plus ground truth.
pub fn generate_demo(spec: &ScenarioSpec) -> Result<(Demonstration, Truth), ScenarioError> {
    spec.validate()?;
    let n = spec.frames;
    let poses = simulate(spec);
    let mut samples = BTreeMap::new();
    let mut models = BTreeMap::new();
    for (i, o) in spec.objects.iter().enumerate() {
        let count = o.spec.sample_count();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E37_79B9).wrapping_add(2 * i as u64 + 1));
        samples.insert(o.spec.name.clone(), o.spec.sample_surface(count, &mut rng));
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E37_79B9).wrapping_add(2 * i as u64 + 2));
        models.insert(o.spec.name.clone(), PointCloud::new(o.spec.name.clone(), o.spec.sample_surface(count, &mut rng)));
    }
    let hand_shape = ObjectSpec::new(HAND, vec![crate::shapes::ShapePart::new(crate::shapes::Shape::Sphere { radius: spec.hand.radius })]);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x4A4E_44);
    let hand_local: Vec<Point3<f64>> = hand_shape.sample_surface(spec.hand.points, &mut rng);
    let centers = hand_centers(spec, &poses);

    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x0F0F_1234);
    let mut jitter = |p: Point3<f64>| -> Point3<f64> {
        if spec.noise_sigma > 0.0 {
            p + Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng))
        } else {
            p
        }
    };

    let names: Vec<String> = spec.objects.iter().map(|o| o.spec.name.clone()).collect();
    let mut frames = Vec::with_capacity(n);
    let mut exact: Vec<BTreeMap<String, Vec<Point3<f64>>>> = Vec::with_capacity(n);
    for f in 0..n {
        let mut clouds = BTreeMap::new();
        let mut clean = BTreeMap::new();
        for name in &names {
            if let Some(p) = poses[name][f] {
                let pts: Vec<Point3<f64>> = samples[name].iter().map(|q| p.transform_point(q)).collect();
                clouds.insert(name.clone(), PointCloud::new(name.clone(), pts.iter().map(|q| jitter(*q)).collect()));
                clean.insert(name.clone(), pts);
            }
        }
        let c = centers[f];
        let hand_pts: Vec<Point3<f64>> = hand_local.iter().map(|q| c + q.coords).collect();
        let hand = PointCloud::new(HAND, hand_pts.iter().map(|q| jitter(*q)).collect());
        clean.insert(HAND.to_string(), hand_pts);
        frames.push(Frame { index: f, clouds, hand: Some(hand) });
        exact.push(clean);
    }

    let mut hand_contacts: BTreeMap<String, Vec<bool>> = names.iter().map(|n| (n.clone(), vec![false; spec.frames])).collect();
    let mut primitives = Vec::new();
    let mut touches: Vec<(usize, usize, &str)> = spec
        .events
        .iter()
        .filter_map(|e| match e {
            ScriptEvent::Touch { object, touch, release, .. } => Some((*touch, *release, object.as_str())),
            _ => None,
        })
        .collect();
    touches.sort();
    for (t, r, name) in touches {
        for s in &mut hand_contacts.get_mut(name).expect("validated")[t..=r] {
            *s = true;
        }
        for (kind, span) in [
            (PrimitiveKind::MakeContact, (t, t)),
            (PrimitiveKind::MaintainContact, (t, r)),
            (PrimitiveKind::BreakContact, (r, r)),
        ] {
            primitives.push(TruthPrimitive { kind, target: name.to_string(), span });
        }
    }

    let mut sorted = names.clone();
    sorted.sort();
    let mut object_contacts = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            let states = exact
                .iter()
                .map(|clean| match (clean.get(a), clean.get(b)) {
                    (Some(pa), Some(pb)) => min_dist(pa, &KdTree::new(pb)) < spec.contact_threshold,
                    _ => false,
                })
                .collect();
            object_contacts.push(PairStates { pair: (a.clone(), b.clone()), states });
        }
    }

    let meta = DemoMeta {
        frame_rate: spec.frame_rate,
        objects: names,
        models,
        symmetry_axes: spec.objects.iter().filter_map(|o| o.spec.symmetry().map(|a| (o.spec.name.clone(), a))).collect(),
    };
    Ok((Demonstration { meta, frames }, Truth { poses, hand_contacts, object_contacts, primitives }))
}
