//! Kinematic execution of a learned policy: timed object trajectories
//! re-anchored in the execution scene, alternative goal poses, IK and
//! RRT-Connect per waypoint, and contact checks at key moments.

mod world;

use std::collections::BTreeSet;

use nalgebra::{Point3, Rotation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use world::{default_home, Grip, SceneSpec, WorldError, WorldObject, WorldState, SCENE_VERSION};

use crate::contact_analysis::{DEFAULT_D_CONTACT, HysteresisParams};
use crate::geometry::kdtree::KdTree;
use crate::geometry::{PointCloud, Pose};
use crate::motion_planning::{
    in_collision, inverse_kinematics_filtered, match_duration, plan_rrt_connect, propose_alternative_poses, resample, time_parameterize,
    ContactBand, IkParams, JointConfig, JointTrajectory, KinematicChain, PlanningError, RrtParams, SymmetrySpec, SAMPLE_PERIOD,
};
use crate::pose_estimation::{icp_register, IcpParams};
use crate::primitive_learning::{Policy, PrimitiveKind, PrimitiveParams};

pub const RESULT_VERSION: u32 = 1;

/// One timed object pose; `reference` `None` means the scene frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedEntry {
    pub timestamp: f64,
    pub object: String,
    pub reference: Option<String>,
    /// Pose relative to `reference`.
    pub pose: Pose,
    /// The same pose anchored in the execution scene.
    pub world_pose: Pose,
    pub contact_set: BTreeSet<(String, String)>,
    /// Demo frame when this entry is a key moment.
    pub key_moment: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedObjectTrajectory {
    pub entries: Vec<TimedEntry>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum InstantiateError {
    #[error("primitive index {0} out of range")]
    NoSuchPrimitive(usize),
    #[error("primitive {0} has no learned parameters")]
    Unlearned(usize),
    #[error("target '{0}' is not in the scene")]
    MissingTarget(String),
    #[error("reference '{0}' is not in the scene")]
    MissingReference(String),
}

fn anchored(world: &WorldState, reference: &str, rel: &Pose) -> Result<Pose, InstantiateError> {
    world.pose(reference).map(|r| *r * *rel).ok_or_else(|| InstantiateError::MissingReference(reference.to_string()))
}

/// Turns a learned primitive into scene-frame object poses for `world`.
pub fn instantiate_trajectory(policy: &Policy, index: usize, world: &WorldState) -> Result<TimedObjectTrajectory, InstantiateError> {
    let prim = policy.primitives.get(index).ok_or(InstantiateError::NoSuchPrimitive(index))?;
    let target = prim.target.as_str();
    let current = *world.pose(target).ok_or_else(|| InstantiateError::MissingTarget(target.to_string()))?;
    let entry = |timestamp, reference: Option<String>, pose, world_pose, contact_set, key_moment| TimedEntry {
        timestamp,
        object: target.to_string(),
        reference,
        pose,
        world_pose,
        contact_set,
        key_moment,
    };
    let entries = match &prim.params {
        PrimitiveParams::Unlearned => return Err(InstantiateError::Unlearned(index)),
        PrimitiveParams::Make(_) => vec![entry(0.0, None, current, current, BTreeSet::new(), None)],
        PrimitiveParams::Maintain(m) => {
            let mut out = Vec::with_capacity(m.dense_track.len());
            for s in &m.dense_track {
                let km = m.key_moments.iter().rev().find(|k| k.frame <= s.frame);
                let contact_set = km.map(|k| k.contact_set.clone()).unwrap_or_default();
                let is_key = m.key_moments.iter().any(|k| k.frame == s.frame).then_some(s.frame);
                let world_pose = anchored(world, &s.reference, &s.pose)?;
                out.push(entry(s.timestamp, Some(s.reference.clone()), s.pose, world_pose, contact_set, is_key));
            }
            out
        }
        PrimitiveParams::Break(b) => {
            let pose = *b.effective();
            let world_pose = anchored(world, &b.reference, &pose)?;
            vec![entry(0.0, Some(b.reference.clone()), pose, world_pose, BTreeSet::new(), None)]
        }
    };
    Ok(TimedObjectTrajectory { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    MotionPlanningFailure,
    IkFailure,
    PoseEstimationFailure,
    MissingReference,
    NotExecuted,
}

/// Relative-pose error at a key moment, against the learned relative pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyMomentCheck {
    pub frame: usize,
    pub reference: String,
    pub translation_error: f64,
    /// Ignores rotation about the object's symmetry axis.
    pub rotation_error: f64,
    pub contacts_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveReport {
    pub index: usize,
    pub kind: PrimitiveKind,
    pub target: String,
    pub outcome: Outcome,
    /// Alternative-pose candidate used for the final goal; 0 is the desired pose.
    pub candidate: Option<usize>,
    pub duration: f64,
    pub key_moments: Vec<KeyMomentCheck>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time: f64,
    pub q: JointConfig,
    pub held: Option<(String, Pose)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub version: u32,
    /// Free-form condition name, used to group rows in evaluation tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub primitives: Vec<PrimitiveReport>,
    pub total_duration: f64,
    /// Every primitive succeeded and every key-moment contact check passed.
    pub success: bool,
    #[serde(skip)]
    pub trace: Vec<TraceSample>,
}

impl ExecutionResult {
    pub fn max_key_moment_error(&self) -> (f64, f64) {
        self.primitives
            .iter()
            .flat_map(|p| &p.key_moments)
            .fold((0.0, 0.0), |(t, r), k| (f64::max(t, k.translation_error), f64::max(r, k.rotation_error)))
    }
}

/// Simulated camera: object poses re-estimated by ICP from noisy renders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptionParams {
    pub noise_sigma: f64,
    pub icp: IcpParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecParams {
    pub ik: IkParams,
    pub rrt: RrtParams,
    pub seed: u64,
    /// When false only the desired pose is tried.
    pub propose_alternatives: bool,
    /// Dense-track entries between Maintain waypoints; key moments are always kept.
    pub stride: usize,
    pub d_contact: f64,
    pub d_break: f64,
    /// Overlap still counted as touching when checking contacts.
    pub penetration_tolerance: f64,
    pub continue_on_error: bool,
    pub perception: Option<PerceptionParams>,
    pub record_trace: bool,
}

impl Default for ExecParams {
    fn default() -> Self {
        let h = HysteresisParams::default();
        ExecParams {
            ik: IkParams { max_restarts: 20, ..Default::default() },
            rrt: RrtParams::default(),
            seed: 0,
            propose_alternatives: true,
            stride: 5,
            d_contact: DEFAULT_D_CONTACT,
            d_break: h.d_break,
            penetration_tolerance: crate::motion_planning::DEFAULT_CONTACT_TOLERANCE,
            continue_on_error: false,
            perception: None,
            record_trace: false,
        }
    }
}

/// Separation thresholds for [`verify_contacts`].
#[derive(Clone, Debug, PartialEq)]
pub struct ContactCheckParams {
    pub d_contact: f64,
    pub d_break: f64,
    pub penetration_tolerance: f64,
    /// Only pairs with this object are required to be apart; `None` checks all.
    pub scope: Option<String>,
}

/// Required pairs must be within `[-penetration_tolerance, d_contact]`;
/// every other present pair (within scope) must be further than `d_break`.
pub fn verify_contacts(world: &WorldState, required: &BTreeSet<(String, String)>, p: &ContactCheckParams) -> bool {
    for (a, b) in required {
        match world.separation(a, b) {
            Some(d) if d >= -p.penetration_tolerance && d <= p.d_contact => {}
            _ => return false,
        }
    }
    let names: Vec<&String> = world.objects.keys().filter(|n| world.is_present(n)).collect();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let pair = ((*a).clone(), (*b).clone());
            if required.contains(&pair) {
                continue;
            }
            if let Some(s) = &p.scope {
                if *a != s && *b != s {
                    continue;
                }
            }
            if world.separation(a, b).is_some_and(|d| d <= p.d_break) {
                return false;
            }
        }
    }
    true
}

/// Rotation error between two poses of an object, ignoring rotation about
/// `axis` (model frame) when the object is symmetric.
pub fn symmetric_rotation_error(a: &Pose, b: &Pose, axis: Option<&Vector3<f64>>) -> f64 {
    match axis {
        Some(ax) => {
            let d = a.rotation.inverse() * b.rotation;
            ax.angle(&(d * ax))
        }
        None => a.rotation_angle_to(b),
    }
}

struct Failure {
    outcome: Outcome,
    message: String,
}

impl Failure {
    fn new(outcome: Outcome, message: impl Into<String>) -> Self {
        Failure { outcome, message: message.into() }
    }
}

fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h = (h ^ p).wrapping_mul(0x1000_0000_01B3).rotate_left(23);
    }
    h
}

struct Runner<'a> {
    chain: &'a KinematicChain,
    p: &'a ExecParams,
    trace: Vec<TraceSample>,
}

impl Runner<'_> {
    /// Tries each tool target in order: collision-free IK, then a path from
    /// the current configuration. Returns the trajectory and the index of
    /// the target that worked.
    fn reach(
        &self,
        world: &WorldState,
        targets: &[(usize, Pose)],
        touching: &BTreeSet<(String, String)>,
        seed: u64,
    ) -> Result<(JointTrajectory, usize), Failure> {
        let scene = world.planning_scene(touching);
        let mut kinematic = false;
        let mut last_err = String::from("no candidate goal");
        for (k, (cand, tool)) in targets.iter().enumerate() {
            let ik = IkParams { seed: mix(seed, &[k as u64]), ..self.p.ik };
            let solved = inverse_kinematics_filtered(self.chain, tool, &world.q, &ik, |q| {
                kinematic = true;
                !in_collision(self.chain, q, &scene)
            });
            let q_goal = match solved {
                Ok(q) => q,
                Err(e) => {
                    last_err = format!("candidate {cand}: {e}");
                    continue;
                }
            };
            let rrt = RrtParams { rng_seed: mix(seed, &[k as u64, 1]), ..self.p.rrt };
            match plan_rrt_connect(self.chain, &scene, &world.q, &q_goal, &rrt) {
                Ok(path) => {
                    let traj = time_parameterize(&path, self.chain).map_err(|e| Failure::new(Outcome::MotionPlanningFailure, e.to_string()))?;
                    return Ok((traj, *cand));
                }
                Err(e) => last_err = format!("candidate {cand}: {e}"),
            }
        }
        let outcome = if kinematic { Outcome::MotionPlanningFailure } else { Outcome::IkFailure };
        Err(Failure::new(outcome, last_err))
    }

    /// Plays `traj` (stretched to `duration`) on the world.
    fn play(&mut self, world: &mut WorldState, traj: &JointTrajectory, duration: f64) -> Result<f64, Failure> {
        let traj = match match_duration(traj, duration) {
            Ok(t) => t,
            Err(PlanningError::DegenerateTrajectory) => traj.clone(),
            Err(e) => return Err(Failure::new(Outcome::MotionPlanningFailure, e.to_string())),
        };
        let t0 = world.clock;
        let planning = |e: PlanningError| Failure::new(Outcome::MotionPlanningFailure, e.to_string());
        if self.p.record_trace {
            let grid = resample(&traj, 1.0 / SAMPLE_PERIOD).map_err(planning)?;
            for s in &grid {
                world.set_config(self.chain, &s.q).map_err(planning)?;
                let held = world.attachment.as_ref().and_then(|g| world.pose(&g.object).map(|p| (g.object.clone(), *p)));
                self.trace.push(TraceSample { time: t0 + s.time, q: s.q.clone(), held });
            }
        } else {
            let last = &traj.samples[traj.samples.len() - 1].q;
            world.set_config(self.chain, last).map_err(planning)?;
        }
        world.clock = t0 + traj.duration();
        Ok(traj.duration())
    }
}

fn candidates(desired: &Pose, axis: Option<Vector3<f64>>, bands: &[ContactBand], propose: bool) -> Vec<Pose> {
    if propose {
        propose_alternative_poses(desired, &SymmetrySpec::new(axis), bands)
    } else {
        vec![*desired]
    }
}

/// Tool frame at a contact location: origin on the surface, z along the
/// approach, rolled by `roll` about it.
fn tool_at(location: &Point3<f64>, approach: &Vector3<f64>, roll: f64) -> Pose {
    let z = approach.try_normalize(1e-12).unwrap_or(-Vector3::z());
    let helper = if z.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let x = (helper - z * helper.dot(&z)).normalize();
    let y = z.cross(&x);
    let base = UnitQuaternion::from_rotation_matrix(&Rotation3::from_basis_unchecked(&[x, y, z]));
    Pose::new(base * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), roll), location.coords)
}

fn snap(surface: &[Point3<f64>], p: &Point3<f64>) -> Point3<f64> {
    if surface.is_empty() {
        return *p;
    }
    let tree = KdTree::new(surface);
    tree.nearest(p).map(|(i, _)| surface[i]).unwrap_or(*p)
}

/// Replaces object poses by ICP estimates from noisy renders of the world.
fn perceive(world: &WorldState, policy: &Policy, pp: &PerceptionParams, seed: u64) -> Result<WorldState, Failure> {
    let mut observed = world.clone();
    let noise = Normal::new(0.0, pp.noise_sigma.max(0.0)).map_err(|e| Failure::new(Outcome::PoseEstimationFailure, e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let held = world.attachment.as_ref().map(|g| g.object.clone());
    for (name, obj) in &world.objects {
        let Some(model) = policy.object_models.get(name) else { continue };
        if !obj.present || held.as_deref() == Some(name) {
            continue;
        }
        let pts: Vec<Point3<f64>> = obj
            .surface
            .iter()
            .map(|q| {
                let w = obj.pose.transform_point(q);
                w + Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)) * (pp.noise_sigma > 0.0) as u8 as f64
            })
            .collect();
        let cloud = PointCloud::new(name.clone(), pts);
        let c = cloud.centroid().expect("non-empty");
        let mc = model.cloud.centroid().ok_or_else(|| Failure::new(Outcome::PoseEstimationFailure, format!("empty model for '{name}'")))?;
        let init = Pose::new(UnitQuaternion::identity(), c - mc);
        let est = icp_register(&model.cloud, &cloud, &init, &pp.icp)
            .map_err(|e| Failure::new(Outcome::PoseEstimationFailure, format!("{name}: {e}")))?;
        observed.objects.get_mut(name).expect("present").pose = est.pose;
    }
    Ok(observed)
}

fn execute_inner(
    policy: &Policy,
    index: usize,
    world: &mut WorldState,
    runner: &mut Runner,
    report: &mut PrimitiveReport,
) -> Result<(), Failure> {
    let p = runner.p;
    let observed = match &p.perception {
        Some(pp) => perceive(world, policy, pp, mix(p.seed, &[index as u64, 99]))?,
        None => world.clone(),
    };
    let traj = instantiate_trajectory(policy, index, &observed).map_err(|e| match e {
        InstantiateError::MissingReference(_) | InstantiateError::MissingTarget(_) => Failure::new(Outcome::MissingReference, e.to_string()),
        _ => Failure::new(Outcome::MotionPlanningFailure, e.to_string()),
    })?;
    let prim = &policy.primitives[index];
    let target = prim.target.as_str();
    let obj = world.objects.get(target).expect("instantiated").clone();
    let seed = mix(p.seed, &[index as u64]);
    match &prim.params {
        PrimitiveParams::Make(m) => {
            let mut locs = m.effective();
            locs.sort_by(|a, b| b.0.support.cmp(&a.0.support));
            let desired = traj.entries[0].world_pose;
            let poses = candidates(&desired, obj.symmetry_axis, &[], p.propose_alternatives);
            let rolls = [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI, -std::f64::consts::FRAC_PI_2];
            let mut targets = Vec::new();
            for (loc, approach) in &locs {
                let at = snap(&obj.surface, &loc.point);
                for (ci, cand) in poses.iter().enumerate() {
                    for roll in rolls {
                        targets.push((ci, *cand * tool_at(&at, approach, roll)));
                    }
                }
            }
            let (t, cand) = runner.reach(world, &targets, &BTreeSet::new(), seed)?;
            report.duration += runner.play(world, &t, 0.0)?;
            report.candidate = Some(cand);
            world.attach(runner.chain, target).map_err(|e| Failure::new(Outcome::MotionPlanningFailure, e.to_string()))?;
        }
        PrimitiveParams::Maintain(m) => {
            let grip = world
                .attachment
                .clone()
                .filter(|g| g.object == target)
                .ok_or_else(|| Failure::new(Outcome::MotionPlanningFailure, format!("'{target}' is not held")))?;
            let n = traj.entries.len();
            let stride = p.stride.max(1);
            let waypoints: Vec<usize> =
                (0..n).filter(|&i| i % stride == 0 || i + 1 == n || traj.entries[i].key_moment.is_some()).collect();
            let mut prev_t = 0.0;
            let mut prev_set = traj.entries[0].contact_set.clone();
            let check = ContactCheckParams {
                d_contact: p.d_contact,
                d_break: p.d_break,
                penetration_tolerance: p.penetration_tolerance,
                scope: Some(target.to_string()),
            };
            for (w, &i) in waypoints.iter().enumerate() {
                let e = &traj.entries[i];
                let touching: BTreeSet<(String, String)> = prev_set.union(&e.contact_set).cloned().collect();
                let bands: Vec<ContactBand> = e
                    .contact_set
                    .iter()
                    .filter_map(|(a, b)| {
                        let other = if a == target { b } else if b == target { a } else { return None };
                        let o = world.objects.get(other).filter(|o| o.present && o.solid)?;
                        Some(ContactBand {
                            object: &obj.model,
                            other: &o.model,
                            other_pose: o.pose,
                            band: p.d_contact,
                            penetration_tolerance: p.penetration_tolerance,
                        })
                    })
                    .collect();
                let poses = candidates(&e.world_pose, obj.symmetry_axis, &bands, p.propose_alternatives);
                let inv = grip.grasp.inverse();
                let targets: Vec<(usize, Pose)> = poses.iter().enumerate().map(|(ci, c)| (ci, *c * inv)).collect();
                let (t, cand) = runner.reach(world, &targets, &touching, mix(seed, &[w as u64]))?;
                report.duration += runner.play(world, &t, e.timestamp - prev_t)?;
                report.candidate = Some(cand);
                prev_t = e.timestamp;
                prev_set = e.contact_set.clone();
                // the first key moment is the state the primitive starts from
                if let (Some(frame), true) = (e.key_moment, i > 0) {
                    let km = m.key_moments.iter().find(|k| k.frame == frame).expect("key moment entry");
                    let (te, re) = match (km.relative_to(&km.reference), world.pose(&km.reference), world.pose(target)) {
                        (Some(learned), Some(r), Some(o)) => {
                            let actual = r.relative(o);
                            (actual.translation_distance(learned), symmetric_rotation_error(learned, &actual, obj.symmetry_axis.as_ref()))
                        }
                        _ => (f64::INFINITY, f64::INFINITY),
                    };
                    report.key_moments.push(KeyMomentCheck {
                        frame,
                        reference: km.reference.clone(),
                        translation_error: te,
                        rotation_error: re,
                        contacts_ok: verify_contacts(world, &km.contact_set, &check),
                    });
                }
            }
        }
        PrimitiveParams::Break(_) => {
            let grip = world
                .attachment
                .clone()
                .filter(|g| g.object == target)
                .ok_or_else(|| Failure::new(Outcome::MotionPlanningFailure, format!("'{target}' is not held")))?;
            let e = &traj.entries[0];
            let reference = e.reference.clone().expect("break entries have a reference");
            let r = world.objects.get(&reference).expect("anchored").clone();
            let touches = obj.model.signed_distance(&e.world_pose, &r.model, &r.pose) <= p.d_contact;
            let band = ContactBand {
                object: &obj.model,
                other: &r.model,
                other_pose: r.pose,
                band: p.d_contact,
                penetration_tolerance: p.penetration_tolerance,
            };
            let bands = if touches && r.solid { vec![band] } else { vec![] };
            let mut touching = BTreeSet::new();
            if touches {
                touching.insert(if target <= reference.as_str() {
                    (target.to_string(), reference.clone())
                } else {
                    (reference.clone(), target.to_string())
                });
            }
            let poses = candidates(&e.world_pose, obj.symmetry_axis, &bands, p.propose_alternatives);
            let inv = grip.grasp.inverse();
            let targets: Vec<(usize, Pose)> = poses.iter().enumerate().map(|(ci, c)| (ci, *c * inv)).collect();
            let (t, cand) = runner.reach(world, &targets, &touching, seed)?;
            report.duration += runner.play(world, &t, 0.0)?;
            report.candidate = Some(cand);
            world.release();
        }
        PrimitiveParams::Unlearned => unreachable!("rejected by instantiate_trajectory"),
    }
    Ok(())
}

fn run_primitive(policy: &Policy, index: usize, world: &WorldState, runner: &mut Runner) -> (WorldState, PrimitiveReport) {
    let prim = &policy.primitives[index];
    let mut report = PrimitiveReport {
        index,
        kind: prim.kind,
        target: prim.target.clone(),
        outcome: Outcome::Success,
        candidate: None,
        duration: 0.0,
        key_moments: Vec::new(),
        message: None,
    };
    let mut next = world.clone();
    let trace_len = runner.trace.len();
    match execute_inner(policy, index, &mut next, runner, &mut report) {
        Ok(()) => (next, report),
        Err(f) => {
            runner.trace.truncate(trace_len);
            report.outcome = f.outcome;
            report.message = Some(f.message);
            report.duration = 0.0;
            report.candidate = None;
            report.key_moments.clear();
            (world.clone(), report)
        }
    }
}

/// Executes one primitive; on failure the returned world equals `world`.
pub fn execute_primitive(
    policy: &Policy,
    index: usize,
    world: &WorldState,
    chain: &KinematicChain,
    params: &ExecParams,
) -> (WorldState, PrimitiveReport) {
    if index >= policy.primitives.len() {
        let report = PrimitiveReport {
            index,
            kind: PrimitiveKind::MakeContact,
            target: String::new(),
            outcome: Outcome::NotExecuted,
            candidate: None,
            duration: 0.0,
            key_moments: Vec::new(),
            message: Some(InstantiateError::NoSuchPrimitive(index).to_string()),
        };
        return (world.clone(), report);
    }
    let mut runner = Runner { chain, p: params, trace: Vec::new() };
    run_primitive(policy, index, world, &mut runner)
}

/// Runs the primitives in order, stopping at the first failure unless
/// `continue_on_error` is set.
pub fn execute_policy(policy: &Policy, world: &WorldState, chain: &KinematicChain, params: &ExecParams) -> (WorldState, ExecutionResult) {
    let mut runner = Runner { chain, p: params, trace: Vec::new() };
    if params.record_trace {
        runner.trace.push(TraceSample { time: world.clock, q: world.q.clone(), held: None });
    }
    let mut state = world.clone();
    let mut reports = Vec::with_capacity(policy.primitives.len());
    let mut stopped = false;
    for (i, prim) in policy.primitives.iter().enumerate() {
        if stopped {
            reports.push(PrimitiveReport {
                index: i,
                kind: prim.kind,
                target: prim.target.clone(),
                outcome: Outcome::NotExecuted,
                candidate: None,
                duration: 0.0,
                key_moments: Vec::new(),
                message: None,
            });
            continue;
        }
        let (next, report) = run_primitive(policy, i, &state, &mut runner);
        stopped = report.outcome != Outcome::Success && !params.continue_on_error;
        state = next;
        reports.push(report);
    }
    let success = reports.iter().all(|r| r.outcome == Outcome::Success && r.key_moments.iter().all(|k| k.contacts_ok));
    let result = ExecutionResult {
        version: RESULT_VERSION,
        label: None,
        total_duration: state.clock - world.clock,
        primitives: reports,
        success,
        trace: runner.trace,
    };
    (state, result)
}
