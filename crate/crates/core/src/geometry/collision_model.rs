use serde::{Deserialize, Serialize};

use super::cluster::cluster;
use super::cloud::{remove_statistical_outliers, PointCloud};
use super::convex::{convex_hull, signed_distance, sphere_gap, ConvexShape};
use super::{GeometryError, Pose};

/// Neighbour count and spread used when filtering a cloud before decomposition.
pub const OUTLIER_NEIGHBOURS: usize = 8;
pub const OUTLIER_STD_RATIO: f64 = 2.0;

/// Union of convex parts expressed in one body frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionModel {
    pub parts: Vec<ConvexShape>,
}

impl CollisionModel {
    pub fn new(parts: Vec<ConvexShape>) -> Result<Self, GeometryError> {
        if parts.is_empty() {
            return Err(GeometryError::NoValidParts);
        }
        Ok(CollisionModel { parts })
    }

    pub fn single(part: ConvexShape) -> Self {
        CollisionModel { parts: vec![part] }
    }

    /// Smallest signed distance between any two parts: positive separation,
    /// or minus the deepest penetration.
    pub fn signed_distance(&self, pose: &Pose, other: &CollisionModel, other_pose: &Pose) -> f64 {
        let mut best = f64::INFINITY;
        for a in &self.parts {
            for b in &other.parts {
                if sphere_gap(a, pose, b, other_pose) >= best {
                    continue;
                }
                best = best.min(signed_distance(a, pose, b, other_pose));
            }
        }
        best
    }

    /// Separation clamped at zero.
    pub fn separation(&self, pose: &Pose, other: &CollisionModel, other_pose: &Pose) -> f64 {
        self.signed_distance(pose, other, other_pose).max(0.0)
    }

    /// True when some pair of parts is closer than `margin`, or overlaps by
    /// more than `-margin` when `margin` is negative.
    pub fn closer_than(&self, pose: &Pose, other: &CollisionModel, other_pose: &Pose, margin: f64) -> bool {
        for a in &self.parts {
            for b in &other.parts {
                if sphere_gap(a, pose, b, other_pose) >= margin {
                    continue;
                }
                if signed_distance(a, pose, b, other_pose) < margin {
                    return true;
                }
            }
        }
        false
    }

    /// Whether `p` (body frame) lies inside some part, within `tol`.
    pub fn contains(&self, p: &nalgebra::Point3<f64>, tol: f64) -> bool {
        use parry3d_f64::query::PointQuery;
        self.parts.iter().any(|s| s.polyhedron().distance_to_local_point(p, true) <= tol)
    }
}

/// Cluster-then-hull decomposition of an object cloud.
///
/// The cloud is outlier-filtered (when it has enough points), density
/// clustered, and every cluster that spans a volume contributes its hull.
pub fn build_collision_model(cloud: &PointCloud, eps: f64, min_pts: usize) -> Result<CollisionModel, GeometryError> {
    if cloud.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    let retained = if cloud.len() > OUTLIER_NEIGHBOURS {
        remove_statistical_outliers(cloud, OUTLIER_NEIGHBOURS, OUTLIER_STD_RATIO)?
    } else {
        cloud.clone()
    };
    let clustering = cluster(&retained.points, eps, min_pts);
    let parts: Vec<ConvexShape> = clustering
        .clusters
        .iter()
        .filter(|c| c.len() >= 4)
        .filter_map(|c| {
            let pts: Vec<_> = c.iter().map(|&i| retained.points[i]).collect();
            convex_hull(&pts).ok()
        })
        .collect();
    CollisionModel::new(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Point3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn box_surface(rng: &mut ChaCha8Rng, center: [f64; 3], half: [f64; 3], n: usize) -> Vec<Point3<f64>> {
        (0..n)
            .map(|i| {
                let face = i % 6;
                let axis = face / 2;
                let sign = if face % 2 == 0 { -1.0 } else { 1.0 };
                let mut p = [0.0; 3];
                for a in 0..3 {
                    p[a] = center[a] + if a == axis { sign * half[a] } else { rng.gen_range(-half[a]..half[a]) };
                }
                Point3::from(p)
            })
            .collect()
    }

    #[test]
    fn two_boxes_give_two_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts = box_surface(&mut rng, [0.0, 0.0, 0.0], [0.03, 0.03, 0.03], 1500);
        pts.extend(box_surface(&mut rng, [0.2, 0.0, 0.0], [0.03, 0.02, 0.04], 1500));
        let model = build_collision_model(&PointCloud::new("boxes", pts.clone()), 0.01, 5).unwrap();
        assert_eq!(model.parts.len(), 2);
        let covered = pts.iter().filter(|p| model.contains(p, 1e-9)).count();
        assert!(covered as f64 >= 0.99 * pts.len() as f64);
    }

    #[test]
    fn sphere_surface_gives_one_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<_> = (0..3000)
            .map(|_| {
                let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                Point3::from(v.normalize() * 0.05)
            })
            .collect();
        let cloud = PointCloud::new("ball", pts.clone());
        let model = build_collision_model(&cloud, 0.01, 5).unwrap();
        assert_eq!(model.parts.len(), 1);
        let retained = remove_statistical_outliers(&cloud, OUTLIER_NEIGHBOURS, OUTLIER_STD_RATIO).unwrap();
        assert!(retained.points.iter().all(|p| model.contains(p, 1e-9)));
        // filtered-out samples sit on the same sphere, just outside the hull facets
        assert!(pts.iter().all(|p| model.contains(p, 2e-3)));
    }

    #[test]
    fn collinear_points_have_no_parts() {
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(0.001, 0.0, 0.0), Point3::new(0.002, 0.0, 0.0)];
        assert!(matches!(
            build_collision_model(&PointCloud::new("line", pts), 0.01, 1),
            Err(GeometryError::NoValidParts)
        ));
    }

    #[test]
    fn signed_distance_between_models() {
        let a = CollisionModel::single(ConvexShape::cuboid(Point3::origin(), Vector3::repeat(0.1)));
        let d = a.signed_distance(&Pose::identity(), &a, &Pose::from_translation(0.25, 0.0, 0.0));
        assert!((d - 0.05).abs() < 1e-9);
        let pen = a.signed_distance(&Pose::identity(), &a, &Pose::from_translation(0.15, 0.0, 0.0));
        assert!((pen + 0.05).abs() < 1e-6);
        assert!(a.closer_than(&Pose::identity(), &a, &Pose::from_translation(0.201, 0.0, 0.0), 0.002));
        assert!(!a.closer_than(&Pose::identity(), &a, &Pose::from_translation(0.21, 0.0, 0.0), 0.002));
    }
}
