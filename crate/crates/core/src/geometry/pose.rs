use std::ops::Mul;

use nalgebra::{Isometry3, Matrix4, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid transform in 3-space: a unit quaternion followed by a translation in meters.
///
/// `a * b` (or [`Pose::compose`]) applies `b` first, then `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    /// w, x, y, z
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRepr {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

impl TryFrom<PoseRepr> for Pose {
    type Error = String;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        let [w, x, y, z] = r.rotation;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return Err(format!("rotation quaternion norm {norm} is not 1"));
        }
        let t = Vector3::from(r.translation);
        if t.iter().any(|v| !v.is_finite()) {
            return Err("translation is not finite".into());
        }
        // Stored values round-trip unchanged when they already have unit norm.
        let rotation = if (norm - 1.0).abs() <= 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::from_quaternion(q)
        };
        Ok(Pose { rotation, translation: t })
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Pose { rotation, translation }
    }

    pub fn identity() -> Self {
        Pose { rotation: UnitQuaternion::identity(), translation: Vector3::zeros() }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Pose { rotation: UnitQuaternion::identity(), translation: Vector3::new(x, y, z) }
    }

    pub fn from_rotation(rotation: UnitQuaternion<f64>) -> Self {
        Pose { rotation, translation: Vector3::zeros() }
    }

    /// Pure rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        Self::from_rotation(UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle))
    }

    /// Roll/pitch/yaw about fixed x, y, z axes.
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        Pose {
            rotation: UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
            translation: Vector3::from(xyz),
        }
    }

    /// Rotation of `angle` about the line through `pivot` with direction `axis`.
    pub fn rotation_about(pivot: &Point3<f64>, axis: &Vector3<f64>, angle: f64) -> Self {
        let to = Pose::from_translation(pivot.x, pivot.y, pivot.z);
        let from = Pose::from_translation(-pivot.x, -pivot.y, -pivot.z);
        to * Pose::from_axis_angle(axis, angle) * from
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose { rotation: inv, translation: -(inv * self.translation) }
    }

    /// Pose of `other` expressed in the frame of `self`: `self⁻¹ ∘ other`.
    pub fn relative(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.translation), self.rotation)
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Pose { rotation: iso.rotation, translation: iso.translation.vector }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        self.to_isometry().to_homogeneous()
    }

    /// Geodesic rotation angle between the two orientations, in radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        self.rotation.angle_to(&other.rotation)
    }

    pub fn translation_distance(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }

    pub fn is_valid(&self) -> bool {
        let q = self.rotation.quaternion();
        q.coords.iter().chain(self.translation.iter()).all(|v| v.is_finite())
            && (q.norm() - 1.0).abs() <= 1e-9
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn invert(p: &Pose) -> Pose {
    p.inverse()
}
