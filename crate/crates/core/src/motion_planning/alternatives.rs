use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{CollisionModel, Pose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetrySpec {
    /// Unit axis in the object model frame, through the model origin.
    pub axis: Option<Vector3<f64>>,
    /// Rotation step about the symmetry axis.
    pub step: f64,
    pub perturbation_angles: Vec<f64>,
}

impl SymmetrySpec {
    pub fn new(axis: Option<Vector3<f64>>) -> Self {
        let d = std::f64::consts::PI / 180.0;
        SymmetrySpec {
            axis: axis.map(|a| a.normalize()),
            step: 10.0 * d,
            perturbation_angles: vec![-5.0 * d, 5.0 * d, -10.0 * d, 10.0 * d],
        }
    }

    /// Only the desired pose.
    pub fn none() -> Self {
        SymmetrySpec { axis: None, step: 0.0, perturbation_angles: Vec::new() }
    }

    /// Axes used for small perturbations: the two orthogonal to the
    /// symmetry axis, or all three model axes.
    pub fn perturbation_axes(&self) -> Vec<Vector3<f64>> {
        match self.axis {
            Some(a) => {
                let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
                let u = a.cross(&helper).normalize();
                vec![u, a.cross(&u)]
            }
            None => vec![Vector3::x(), Vector3::y(), Vector3::z()],
        }
    }
}

/// Required separation between the candidate-posed object and a fixed body.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactBand<'a> {
    pub object: &'a CollisionModel,
    pub other: &'a CollisionModel,
    pub other_pose: Pose,
    pub band: f64,
    /// Overlap still counted as touching.
    pub penetration_tolerance: f64,
}

impl ContactBand<'_> {
    pub fn admits(&self, pose: &Pose) -> bool {
        let d = self.object.signed_distance(pose, self.other, &self.other_pose);
        d >= -self.penetration_tolerance && d <= self.band
    }
}

/// Desired pose first, then the full circle about the symmetry axis, then
/// small rotations about the remaining axes. Candidates after the first
/// must satisfy every contact band.
pub fn propose_alternative_poses(desired: &Pose, sym: &SymmetrySpec, bands: &[ContactBand]) -> Vec<Pose> {
    let mut out = vec![*desired];
    let mut candidates = Vec::new();
    if let Some(axis) = sym.axis {
        if sym.step > 0.0 {
            let n = (std::f64::consts::TAU / sym.step).round() as usize;
            for k in 1..n {
                candidates.push(*desired * Pose::from_axis_angle(&axis, k as f64 * sym.step));
            }
        }
    }
    for axis in sym.perturbation_axes() {
        for &a in &sym.perturbation_angles {
            candidates.push(*desired * Pose::from_axis_angle(&axis, a));
        }
    }
    out.extend(candidates.into_iter().filter(|c| bands.iter().all(|b| b.admits(c))));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexShape, PointCloud};
    use nalgebra::Point3;

    #[test]
    fn no_symmetry_no_perturbation() {
        let p = Pose::from_translation(1.0, 2.0, 3.0);
        assert_eq!(propose_alternative_poses(&p, &SymmetrySpec::none(), &[]), vec![p]);
    }

    #[test]
    fn counts_with_z_symmetry() {
        let p = Pose::from_xyz_rpy([0.5, 0.0, 0.1], [0.1, 0.2, 0.3]);
        let out = propose_alternative_poses(&p, &SymmetrySpec::new(Some(Vector3::z())), &[]);
        assert_eq!(out.len(), 36 + 2 * 4);
        assert_eq!(out[0], p);
        for (k, c) in out[..36].iter().enumerate() {
            let ang = p.rotation_angle_to(c);
            let expect = (k as f64 * 10f64.to_radians()).min(std::f64::consts::TAU - k as f64 * 10f64.to_radians());
            assert!((ang - expect).abs() < 1e-9);
            assert!(c.translation_distance(&p) < 1e-12);
        }
        let no_axis = propose_alternative_poses(&p, &SymmetrySpec { axis: None, ..SymmetrySpec::new(None) }, &[]);
        assert_eq!(no_axis.len(), 1 + 3 * 4);
    }

    #[test]
    fn symmetry_candidates_leave_ring_invariant() {
        let r = 0.08;
        let ring: Vec<Point3<f64>> = (0..360)
            .map(|i| {
                let a = (i as f64).to_radians();
                Point3::new(r * a.cos(), r * a.sin(), 0.02)
            })
            .collect();
        let cloud = PointCloud::new("ring", ring);
        let desired = Pose::from_xyz_rpy([0.4, 0.1, 0.0], [0.3, 0.0, 1.0]);
        let spec = SymmetrySpec::new(Some(Vector3::z()));
        let base = cloud.transformed(&desired);
        let bound = 2.0 * r * (spec.step / 2.0).sin();
        for c in &propose_alternative_poses(&desired, &spec, &[])[..36] {
            let moved = cloud.transformed(c);
            let h = moved
                .points
                .iter()
                .map(|p| base.points.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            assert!(h < bound);
        }
    }

    #[test]
    fn band_excludes_penetrating_candidates() {
        // a flat plate resting on a floor; tilting it digs an edge in
        let plate = CollisionModel::single(ConvexShape::cuboid(Point3::origin(), Vector3::new(0.1, 0.1, 0.005)));
        let floor = CollisionModel::single(ConvexShape::cuboid(Point3::origin(), Vector3::new(1.0, 1.0, 0.05)));
        let desired = Pose::from_translation(0.0, 0.0, 0.0551);
        let band = ContactBand {
            object: &plate,
            other: &floor,
            other_pose: Pose::identity(),
            band: 0.01,
            penetration_tolerance: 0.002,
        };
        let spec = SymmetrySpec::new(Some(Vector3::z()));
        let out = propose_alternative_poses(&desired, &spec, std::slice::from_ref(&band));
        // every in-plane rotation keeps contact; every tilt digs in by ~8-17 mm
        assert_eq!(out.len(), 36);
        assert!(out.iter().all(|p| band.admits(p)));
    }
}
