use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use super::{GeometryError, Pose};

/// Labeled set of 3D points in meters.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub label: String,
    pub points: Vec<Point3<f64>>,
}

impl PointCloud {
    pub fn new(label: impl Into<String>, points: Vec<Point3<f64>>) -> Self {
        PointCloud { label: label.into(), points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.points.iter().map(|p| p.coords).sum();
        Some(Point3::from(sum / self.points.len() as f64))
    }

    pub fn transformed(&self, pose: &Pose) -> PointCloud {
        transform_cloud(pose, self)
    }
}

pub fn transform_cloud(pose: &Pose, cloud: &PointCloud) -> PointCloud {
    PointCloud {
        label: cloud.label.clone(),
        points: cloud.points.iter().map(|p| pose.transform_point(p)).collect(),
    }
}

/// Smallest point-to-point distance between two clouds.
///
/// The tree is built over the larger cloud; the result is the same either way
/// because squared distances are computed coordinate-wise in a fixed order.
pub fn min_distance(a: &PointCloud, b: &PointCloud) -> Result<f64, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    let (query, indexed) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let tree = KdTree::new(&indexed.points);
    Ok(min_distance_to_tree(&query.points, &tree))
}

pub(crate) fn min_distance_to_tree(points: &[Point3<f64>], tree: &KdTree) -> f64 {
    let mut best = f64::INFINITY;
    for p in points {
        if let Some((_, d2)) = tree.nearest_within(p, best) {
            best = d2;
            if best == 0.0 {
                break;
            }
        }
    }
    best.sqrt()
}

/// Drops points whose mean distance to their `k` nearest neighbours exceeds
/// `mean + std_ratio * std` of that statistic over the whole cloud.
pub fn remove_statistical_outliers(
    cloud: &PointCloud,
    k: usize,
    std_ratio: f64,
) -> Result<PointCloud, GeometryError> {
    if k == 0 || cloud.len() <= k {
        return Err(GeometryError::TooFewPoints { have: cloud.len(), need: k + 1 });
    }
    if !(std_ratio > 0.0) {
        return Err(GeometryError::InvalidParameter("std_ratio must be positive".into()));
    }
    let tree = KdTree::new(&cloud.points);
    let stats: Vec<f64> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let nn = tree.knn(p, k + 1);
            let mut sum = 0.0;
            let mut taken = 0;
            for (j, d2) in nn {
                if j == i || taken == k {
                    continue;
                }
                sum += d2.sqrt();
                taken += 1;
            }
            sum / taken as f64
        })
        .collect();
    let n = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / n;
    let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let threshold = mean + std_ratio * var.sqrt();
    // Rounding slack so that a zero-variance cloud is never trimmed.
    let threshold = threshold + 4.0 * f64::EPSILON * threshold.abs();
    let points = cloud
        .points
        .iter()
        .zip(&stats)
        .filter(|(_, s)| **s <= threshold)
        .map(|(p, _)| *p)
        .collect();
    Ok(PointCloud { label: cloud.label.clone(), points })
}
