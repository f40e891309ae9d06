//! Rigid-body math, point clouds, spatial indexing, clustering and convex
//! collision geometry.

mod cloud;
mod cluster;
mod collision_model;
mod convex;
pub mod kdtree;
mod pose;

pub use cloud::{min_distance, remove_statistical_outliers, transform_cloud, PointCloud};
pub use cluster::{cluster, Clustering};
pub use collision_model::{build_collision_model, CollisionModel, OUTLIER_NEIGHBOURS, OUTLIER_STD_RATIO};
pub use convex::{convex_distance, convex_hull, signed_distance, ConvexDistance, ConvexShape};
pub use pose::{compose, invert, Pose};


/// Default density-clustering radius for household-scale objects.
pub const DEFAULT_CLUSTER_EPS: f64 = 0.01;
pub const DEFAULT_CLUSTER_MIN_PTS: usize = 5;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("need at least {need} points, have {have}")]
    TooFewPoints { have: usize, need: usize },
    #[error("points are coplanar or collinear")]
    Degenerate,
    #[error("no cluster yields a valid convex part")]
    NoValidParts,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
