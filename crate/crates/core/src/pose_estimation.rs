//! Point-to-point ICP registration of an object model against its observed
//! segmented cloud, and frame-to-frame tracking over a demonstration.
//!
//! The registration error is the truncated RMSE over *all* model points,
//! `sqrt(mean(min(d², gate²)))`, where `d` is the nearest-neighbour distance
//! into the observed cloud. Each closed-form update minimises the inlier sum
//! for fixed correspondences, so this objective can never increase from one
//! iteration to the next.

use nalgebra::{Matrix3, Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::demonstration::Frame;
use crate::geometry::kdtree::KdTree;
use crate::geometry::{PointCloud, Pose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpParams {
    pub max_iterations: usize,
    pub correspondence_max_dist: f64,
    /// Stop once the error improves by less than this (meters).
    pub convergence_delta: f64,
    pub min_fitness: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams { max_iterations: 60, correspondence_max_dist: 0.05, convergence_delta: 1e-7, min_fitness: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    /// Model frame → scene frame.
    pub pose: Pose,
    pub rmse: f64,
    /// Fraction of model points with a gated correspondence.
    pub fitness: f64,
    pub iterations: usize,
    /// Error before the first update and after every accepted update.
    pub rmse_history: Vec<f64>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PoseError {
    #[error("registration needs at least 3 points in each cloud (model {model}, observed {observed})")]
    TooFewPoints { model: usize, observed: usize },
    #[error("no correspondences within {gate} m at the initial pose")]
    NoCorrespondences { gate: f64 },
    #[error("fitness {fitness:.3} below required {min:.3}")]
    LowFitness { fitness: f64, min: f64 },
    #[error("object '{0}' is never observed")]
    NeverObserved(String),
    #[error("invalid ICP parameters: {0}")]
    InvalidParams(&'static str),
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<PoseError>,
    },
}

struct Evaluation {
    objective: f64,
    inliers: Vec<(Point3<f64>, Point3<f64>)>,
}

fn evaluate(model: &[Point3<f64>], pose: &Pose, tree: &KdTree, gate2: f64) -> Evaluation {
    let mut sum = 0.0;
    let mut inliers = Vec::with_capacity(model.len());
    for x in model {
        let px = pose.transform_point(x);
        let (j, d2) = tree.nearest(&px).expect("observed cloud is non-empty");
        if d2 <= gate2 {
            sum += d2;
            inliers.push((px, *tree.point(j)));
        } else {
            sum += gate2;
        }
    }
    Evaluation { objective: (sum / model.len() as f64).sqrt(), inliers }
}

/// Least-squares rigid motion taking `src` onto `dst` (Kabsch / Umeyama without scale).
pub fn best_rigid_transform(pairs: &[(Point3<f64>, Point3<f64>)]) -> Option<Pose> {
    if pairs.len() < 3 {
        return None;
    }
    let n = pairs.len() as f64;
    let cs: Vector3<f64> = pairs.iter().map(|(s, _)| s.coords).sum::<Vector3<f64>>() / n;
    let cd: Vector3<f64> = pairs.iter().map(|(_, d)| d.coords).sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in pairs {
        h += (s.coords - cs) * (d.coords - cd).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let v = v_t.transpose();
    let mut correction = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        correction[(2, 2)] = -1.0;
    }
    let r = v * correction * u.transpose();
    let rotation = UnitQuaternion::from_matrix(&r);
    let translation = cd - rotation * cs;
    Some(Pose::new(rotation, translation))
}

pub fn icp_register(
    model: &PointCloud,
    observed: &PointCloud,
    init: &Pose,
    params: &IcpParams,
) -> Result<PoseEstimate, PoseError> {
    if model.len() < 3 || observed.len() < 3 {
        return Err(PoseError::TooFewPoints { model: model.len(), observed: observed.len() });
    }
    if params.max_iterations == 0 {
        return Err(PoseError::InvalidParams("max_iterations must be at least 1"));
    }
    if !(params.correspondence_max_dist > 0.0) || !(params.convergence_delta >= 0.0) {
        return Err(PoseError::InvalidParams("gate must be positive and convergence delta non-negative"));
    }
    let gate2 = params.correspondence_max_dist * params.correspondence_max_dist;
    let tree = KdTree::new(&observed.points);

    let mut pose = *init;
    let mut eval = evaluate(&model.points, &pose, &tree, gate2);
    if eval.inliers.is_empty() {
        return Err(PoseError::NoCorrespondences { gate: params.correspondence_max_dist });
    }
    let mut history = vec![eval.objective];
    let mut iterations = 0;
    while iterations < params.max_iterations {
        let Some(step) = best_rigid_transform(&eval.inliers) else { break };
        let candidate = step * pose;
        let next = evaluate(&model.points, &candidate, &tree, gate2);
        if next.objective > eval.objective {
            break;
        }
        iterations += 1;
        let improvement = eval.objective - next.objective;
        pose = candidate;
        eval = next;
        history.push(eval.objective);
        if improvement < params.convergence_delta {
            break;
        }
    }

    let fitness = eval.inliers.len() as f64 / model.len() as f64;
    if fitness < params.min_fitness {
        return Err(PoseError::LowFitness { fitness, min: params.min_fitness });
    }
    Ok(PoseEstimate { pose, rmse: eval.objective, fitness, iterations, rmse_history: history })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrackedPose {
    Estimated(PoseEstimate),
    Missing,
}

impl TrackedPose {
    pub fn pose(&self) -> Option<&Pose> {
        match self {
            TrackedPose::Estimated(e) => Some(&e.pose),
            TrackedPose::Missing => None,
        }
    }
}

/// Registers `model` against `object`'s segmented cloud in every frame,
/// chaining each frame's initial guess from the last estimate shifted by the
/// motion of the observed centroid.
///
/// The first detected frame starts from the translation that aligns the model
/// centroid with the observed centroid, which is the identity whenever the
/// model is already expressed at the object's first observed placement.
pub fn track_poses(
    model: &PointCloud,
    frames: &[Frame],
    object: &str,
    params: &IcpParams,
) -> Result<Vec<TrackedPose>, PoseError> {
    if !frames.iter().any(|f| f.cloud(object).is_some_and(|c| !c.is_empty())) {
        return Err(PoseError::NeverObserved(object.to_string()));
    }
    let model_centroid = model.centroid().ok_or(PoseError::TooFewPoints { model: 0, observed: 0 })?;
    let mut last: Option<(Pose, Point3<f64>)> = None;
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        let Some(obs) = f.cloud(object).filter(|c| !c.is_empty()) else {
            out.push(TrackedPose::Missing);
            continue;
        };
        let c = obs.centroid().expect("non-empty");
        // the observed centroid shift predicts the translation of a moving object
        let init = match last {
            Some((p, prev)) => Pose::new(p.rotation, p.translation + (c - prev)),
            None => Pose::from_translation(c.x - model_centroid.x, c.y - model_centroid.y, c.z - model_centroid.z),
        };
        let est = icp_register(model, obs, &init, params)
            .map_err(|e| PoseError::Frame { frame: f.index, source: Box::new(e) })?;
        last = Some((est.pose, c));
        out.push(TrackedPose::Estimated(est));
    }
    Ok(out)
}
