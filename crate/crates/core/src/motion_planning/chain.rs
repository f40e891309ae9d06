use nalgebra::{Matrix6xX, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{JointConfig, PlanningError};
use crate::geometry::{CollisionModel, ConvexShape, Pose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub axis: Vector3<f64>,
    /// Parent frame to joint frame at zero displacement.
    pub origin: Pose,
    pub limits: (f64, f64),
    pub vel_limit: f64,
    pub acc_limit: f64,
}

impl Joint {
    fn motion(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::from_axis_angle(&self.axis, q),
            JointKind::Prismatic => {
                let t = self.axis * q;
                Pose::from_translation(t.x, t.y, t.z)
            }
        }
    }
}

/// Serial chain. `links[0]` is the fixed base; `links[i]` moves with joint `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicChain {
    pub name: String,
    pub joints: Vec<Joint>,
    pub links: Vec<CollisionModel>,
    pub tool_frame: Pose,
    /// Link index pairs never checked against each other (adjacent pairs are
    /// always exempt).
    pub self_collision_exempt: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FkResult {
    /// Base link followed by each joint's frame after its motion.
    pub links: Vec<Pose>,
    pub tool: Pose,
}

impl KinematicChain {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn check_dims(&self, q: &[f64]) -> Result<(), PlanningError> {
        if q.len() == self.dof() {
            Ok(())
        } else {
            Err(PlanningError::DimensionMismatch { expected: self.dof(), got: q.len() })
        }
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof() && self.joints.iter().zip(q).all(|(j, v)| j.limits.0 <= *v && *v <= j.limits.1)
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (j, v) in self.joints.iter().zip(q.iter_mut()) {
            *v = v.clamp(j.limits.0, j.limits.1);
        }
    }

    pub fn forward_kinematics(&self, q: &[f64]) -> Result<FkResult, PlanningError> {
        self.check_dims(q)?;
        let mut links = Vec::with_capacity(self.dof() + 1);
        let mut t = Pose::identity();
        links.push(t);
        for (j, v) in self.joints.iter().zip(q) {
            t = t * j.origin * j.motion(*v);
            links.push(t);
        }
        Ok(FkResult { tool: t * self.tool_frame, links })
    }

    pub fn tool_pose(&self, q: &[f64]) -> Result<Pose, PlanningError> {
        Ok(self.forward_kinematics(q)?.tool)
    }

    /// Geometric Jacobian of the tool point: rows are linear then angular
    /// velocity in the base frame.
    pub fn jacobian(&self, fk: &FkResult) -> Matrix6xX<f64> {
        let mut jac = Matrix6xX::zeros(self.dof());
        let p_tool = fk.tool.translation;
        for (i, j) in self.joints.iter().enumerate() {
            let frame = &fk.links[i + 1];
            let axis = frame.transform_vector(&j.axis);
            let (lin, ang) = match j.kind {
                JointKind::Revolute => (axis.cross(&(p_tool - frame.translation)), axis),
                JointKind::Prismatic => (axis, Vector3::zeros()),
            };
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&ang);
        }
        jac
    }

    pub fn from_description(d: &RobotDescription) -> Result<Self, PlanningError> {
        let bad = |m: String| Err(PlanningError::InvalidDescription(m));
        if d.joints.is_empty() {
            return bad("no joints".into());
        }
        if d.links.len() != d.joints.len() + 1 {
            return bad(format!("{} links for {} joints (need joints + 1)", d.links.len(), d.joints.len()));
        }
        let mut joints = Vec::new();
        for j in &d.joints {
            let axis = Vector3::from(j.axis);
            if (axis.norm() - 1.0).abs() > 1e-9 {
                return bad(format!("joint '{}': axis is not unit length", j.name));
            }
            if !(j.limits[0] < j.limits[1]) || !(j.vel_limit > 0.0) || !(j.acc_limit > 0.0) {
                return bad(format!("joint '{}': invalid limits", j.name));
            }
            joints.push(Joint {
                name: j.name.clone(),
                kind: j.kind,
                axis,
                origin: j.origin.pose(),
                limits: (j.limits[0], j.limits[1]),
                vel_limit: j.vel_limit,
                acc_limit: j.acc_limit,
            });
        }
        let mut links = Vec::new();
        for (i, l) in d.links.iter().enumerate() {
            let parts = l
                .parts
                .iter()
                .map(|p| p.shape())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| PlanningError::InvalidDescription(format!("link {i}: {e}")))?;
            links.push(CollisionModel { parts });
        }
        for &(a, b) in &d.self_collision_exempt {
            if a >= links.len() || b >= links.len() {
                return bad(format!("exempt pair ({a}, {b}) out of range"));
            }
        }
        Ok(KinematicChain {
            name: d.name.clone(),
            joints,
            links,
            tool_frame: d.tool_frame.pose(),
            self_collision_exempt: d.self_collision_exempt.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PlanningError> {
        let d: RobotDescription =
            serde_json::from_str(text).map_err(|e| PlanningError::InvalidDescription(e.to_string()))?;
        Self::from_description(&d)
    }

    /// Bundled 7-joint arm approximating a Franka-class robot with a parallel
    /// gripper; the tool frame sits between the fingertips.
    pub fn franka_like() -> Self {
        Self::from_json(include_str!("../../data/franka_like.json")).expect("bundled description is valid")
    }

    /// Joint midpoints, a convenient collision-free seed.
    pub fn mid_config(&self) -> JointConfig {
        self.joints.iter().map(|j| 0.5 * (j.limits.0 + j.limits.1)).collect()
    }

    pub(crate) fn exempt(&self, a: usize, b: usize) -> bool {
        let (a, b) = (a.min(b), a.max(b));
        b == a + 1 || self.self_collision_exempt.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b))
    }
}

/// Declarative robot file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotDescription {
    pub name: String,
    pub joints: Vec<JointSpec>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub tool_frame: FrameSpec,
    #[serde(default)]
    pub self_collision_exempt: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub axis: [f64; 3],
    pub origin: FrameSpec,
    pub limits: [f64; 2],
    pub vel_limit: f64,
    pub acc_limit: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl FrameSpec {
    pub fn pose(&self) -> Pose {
        Pose::from_xyz_rpy(self.xyz, self.rpy)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub parts: Vec<PartSpec>,
}

/// One convex part in link coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartSpec {
    Vertices(Vec<[f64; 3]>),
    Box { center: [f64; 3], half_extents: [f64; 3] },
    /// Hull of two axis-aligned cubes of half size `radius` at the endpoints.
    Segment { from: [f64; 3], to: [f64; 3], radius: f64 },
}

impl PartSpec {
    pub fn shape(&self) -> Result<ConvexShape, crate::geometry::GeometryError> {
        match self {
            PartSpec::Vertices(v) => ConvexShape::from_vertices(v.iter().map(|p| Point3::from(*p)).collect()),
            PartSpec::Box { center, half_extents } => {
                let half = Vector3::from(*half_extents);
                if half.iter().any(|h| !(*h > 0.0)) {
                    return Err(crate::geometry::GeometryError::Degenerate);
                }
                Ok(ConvexShape::cuboid(Point3::from(*center), half))
            }
            PartSpec::Segment { from, to, radius } => {
                let mut v = Vec::with_capacity(16);
                for end in [from, to] {
                    for s in 0..8 {
                        let sign = |bit: usize| if s >> bit & 1 == 1 { *radius } else { -*radius };
                        v.push(Point3::new(end[0] + sign(0), end[1] + sign(1), end[2] + sign(2)));
                    }
                }
                ConvexShape::from_vertices(v)
            }
        }
    }
}
