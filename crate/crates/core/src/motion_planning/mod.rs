//! Kinematics, collision checking, goal-pose alternatives, RRT-Connect and
//! trajectory timing for a serial arm.

mod alternatives;
pub mod chain;
mod ik;
mod rrt;
mod scene;
mod timing;

use serde::{Deserialize, Serialize};

pub use alternatives::{propose_alternative_poses, ContactBand, SymmetrySpec};
pub use chain::{FkResult, Joint, JointKind, KinematicChain, RobotDescription};
pub use ik::{inverse_kinematics, inverse_kinematics_filtered, tool_error, IkParams};
pub use rrt::{path_free, plan_rrt_connect, segment_free, segment_samples, RrtParams};
pub use scene::{in_collision, Attachment, Scene, SceneObject, DEFAULT_CONTACT_TOLERANCE, DEFAULT_MARGIN};
pub use timing::{
    match_duration, resample, segment_duration, time_parameterize, JointTrajectory, TimedConfig, SAMPLE_PERIOD,
};

/// One scalar per joint, radians or meters.
pub type JointConfig = Vec<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPath {
    pub waypoints: Vec<JointConfig>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlanningError {
    #[error("expected {expected} joint values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no IK solution")]
    NoSolution,
    #[error("start configuration in collision or out of limits")]
    StartInCollision,
    #[error("goal configuration in collision or out of limits")]
    GoalInCollision,
    #[error("no path after {iters} iterations")]
    Timeout { iters: usize },
    #[error("cannot stretch a zero-duration trajectory")]
    DegenerateTrajectory,
    #[error("invalid robot description: {0}")]
    InvalidDescription(String),
    #[error("{0}")]
    InvalidParameter(&'static str),
}
