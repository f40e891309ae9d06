#![allow(dead_code)]

use std::sync::OnceLock;

use contact_lfd::demonstration::Demonstration;
use contact_lfd::pipeline::{learn_from_demo, PipelineParams, Segmentation};
use contact_lfd::primitive_learning::{Policy, PoseTracks};
use contact_lfd::scenario::{generate_demo, PlacedObject, Truth};
use contact_lfd::scenarios::dishwash_spec;
use contact_lfd::shapes::ObjectSpec;
use contact_lfd::geometry::Pose;

pub struct Learned {
    pub demo: Demonstration,
    pub truth: Truth,
    pub seg: Segmentation,
    pub tracks: PoseTracks,
    pub policy: Policy,
}

/// The dishwash demonstration, learned once per test binary.
pub fn dishwash() -> &'static Learned {
    static CELL: OnceLock<Learned> = OnceLock::new();
    CELL.get_or_init(|| {
        let (demo, truth) = generate_demo(&dishwash_spec(1)).expect("valid script");
        let (seg, tracks, policy) = learn_from_demo(&demo, &PipelineParams::default()).expect("learnable");
        Learned { demo, truth, seg, tracks, policy }
    })
}

pub fn placed(spec: ObjectSpec, pose: Pose) -> PlacedObject {
    PlacedObject { spec, pose, initially_present: true }
}

use contact_lfd::motion_planning::chain::{FrameSpec, JointSpec, LinkSpec, RobotDescription};
use contact_lfd::motion_planning::{JointKind, JointPath, JointTrajectory, KinematicChain};
use rand::Rng;

/// One revolute joint with the given limits.
pub fn single_joint(vel: f64, acc: f64) -> KinematicChain {
    KinematicChain::from_description(&RobotDescription {
        name: "one".into(),
        joints: vec![JointSpec {
            name: "j".into(),
            kind: JointKind::Revolute,
            axis: [0.0, 0.0, 1.0],
            origin: FrameSpec::default(),
            limits: [-10.0, 10.0],
            vel_limit: vel,
            acc_limit: acc,
        }],
        links: vec![LinkSpec::default(); 2],
        tool_frame: FrameSpec::default(),
        self_collision_exempt: vec![],
    })
    .unwrap()
}

/// 2 to 6 waypoints uniform within the joint limits.
pub fn random_path<R: Rng>(chain: &KinematicChain, rng: &mut R) -> JointPath {
    let n = rng.gen_range(2..=6);
    let waypoints = (0..n).map(|_| chain.joints.iter().map(|j| rng.gen_range(j.limits.0..=j.limits.1)).collect()).collect();
    JointPath { waypoints }
}

/// Largest velocity and acceleration ratio to the joint limits under
/// central differences on the uniform part of the sample grid.
pub fn worst_limit_ratio(traj: &JointTrajectory, chain: &KinematicChain) -> (f64, f64) {
    let s = &traj.samples;
    let (mut v, mut a) = (0.0f64, 0.0f64);
    for w in s.windows(3) {
        let (h1, h2) = (w[1].time - w[0].time, w[2].time - w[1].time);
        if (h1 - h2).abs() > 1e-12 {
            continue;
        }
        for (j, joint) in chain.joints.iter().enumerate() {
            let vel = (w[2].q[j] - w[0].q[j]) / (2.0 * h1);
            let acc = (w[2].q[j] - 2.0 * w[1].q[j] + w[0].q[j]) / (h1 * h1);
            v = v.max(vel.abs() / joint.vel_limit);
            a = a.max(acc.abs() / joint.acc_limit);
        }
    }
    // one-sided differences at the grid ends catch jumps there
    for w in s.windows(2) {
        let h = w[1].time - w[0].time;
        for (j, joint) in chain.joints.iter().enumerate() {
            v = v.max((w[1].q[j] - w[0].q[j]).abs() / h / joint.vel_limit);
        }
    }
    (v, a)
}
