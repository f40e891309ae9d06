//! Analytic object geometry: surface sampling for synthetic clouds and
//! convex decomposition for collision checking.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{CollisionModel, ConvexShape, GeometryError, Pose};

/// Polygon resolution for round shapes.
const SECTORS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Centered on the origin.
    Box { half_extents: [f64; 3] },
    /// Axis along +z, base on z = 0.
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
    /// Open-top surface of revolution about +z. `profile` lists (radius,
    /// height) pairs from the rim of the flat bottom upwards.
    Lathe { profile: Vec<[f64; 2]>, thickness: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapePart {
    pub shape: Shape,
    #[serde(default)]
    pub pose: Pose,
}

impl ShapePart {
    pub fn new(shape: Shape) -> Self {
        ShapePart { shape, pose: Pose::identity() }
    }

    pub fn at(shape: Shape, x: f64, y: f64, z: f64) -> Self {
        ShapePart { shape, pose: Pose::from_translation(x, y, z) }
    }
}

fn default_true() -> bool {
    true
}

fn default_density() -> f64 {
    50_000.0
}

/// A named rigid object built from shape parts in its model frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    pub parts: Vec<ShapePart>,
    #[serde(default = "default_true")]
    pub solid: bool,
    #[serde(default)]
    pub symmetry_axis: Option<[f64; 3]>,
    /// Surface samples per square meter.
    #[serde(default = "default_density")]
    pub density: f64,
}

impl ObjectSpec {
    pub fn new(name: &str, parts: Vec<ShapePart>) -> Self {
        ObjectSpec { name: name.to_string(), parts, solid: true, symmetry_axis: None, density: default_density() }
    }

    pub fn collision_model(&self) -> Result<CollisionModel, GeometryError> {
        let mut out = Vec::new();
        for p in &self.parts {
            for s in pieces(&p.shape)? {
                out.push(s.transformed(&p.pose));
            }
        }
        CollisionModel::new(out)
    }

    pub fn surface_area(&self) -> f64 {
        self.parts.iter().flat_map(|p| patches(&p.shape)).map(|p| p.area()).sum()
    }

    /// `n` points drawn uniformly by area over all part surfaces.
    pub fn sample_surface<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Point3<f64>> {
        let all: Vec<(Pose, Patch)> =
            self.parts.iter().flat_map(|p| patches(&p.shape).into_iter().map(move |q| (p.pose, q))).collect();
        let total: f64 = all.iter().map(|(_, p)| p.area()).sum();
        if all.is_empty() || total <= 0.0 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = &all[all.len() - 1];
            for item in &all {
                if u < item.1.area() {
                    chosen = item;
                    break;
                }
                u -= item.1.area();
            }
            out.push(chosen.0.transform_point(&chosen.1.sample(rng)));
        }
        out
    }

    /// Sample count implied by the density, at least 50.
    pub fn sample_count(&self) -> usize {
        ((self.surface_area() * self.density).round() as usize).max(50)
    }

    pub fn symmetry(&self) -> Option<Vector3<f64>> {
        self.symmetry_axis.map(Vector3::from)
    }
}

enum Patch {
    /// origin + a u + b v for a, b in [0, 1].
    Rect { origin: Point3<f64>, u: Vector3<f64>, v: Vector3<f64> },
    Disk { z: f64, radius: f64 },
    Frustum { r0: f64, z0: f64, r1: f64, z1: f64 },
    Sphere { radius: f64 },
}

impl Patch {
    fn area(&self) -> f64 {
        match self {
            Patch::Rect { u, v, .. } => u.cross(v).norm(),
            Patch::Disk { radius, .. } => PI * radius * radius,
            Patch::Frustum { r0, z0, r1, z1 } => PI * (r0 + r1) * ((r1 - r0).powi(2) + (z1 - z0).powi(2)).sqrt(),
            Patch::Sphere { radius } => 4.0 * PI * radius * radius,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Point3<f64> {
        match self {
            Patch::Rect { origin, u, v } => origin + u * rng.gen::<f64>() + v * rng.gen::<f64>(),
            Patch::Disk { z, radius } => {
                let r = radius * rng.gen::<f64>().sqrt();
                let a = rng.gen::<f64>() * TAU;
                Point3::new(r * a.cos(), r * a.sin(), *z)
            }
            Patch::Frustum { r0, z0, r1, z1 } => {
                // radius-weighted position along the slant
                let t = if (r1 - r0).abs() < 1e-12 {
                    rng.gen::<f64>()
                } else {
                    let u = rng.gen::<f64>();
                    let (a, b) = (r0 * r0, r1 * r1);
                    ((a + u * (b - a)).sqrt() - r0) / (r1 - r0)
                };
                let r = r0 + t * (r1 - r0);
                let a = rng.gen::<f64>() * TAU;
                Point3::new(r * a.cos(), r * a.sin(), z0 + t * (z1 - z0))
            }
            Patch::Sphere { radius } => loop {
                let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let n = v.norm();
                if n > 1e-6 && n <= 1.0 {
                    break Point3::from(v / n * *radius);
                }
            },
        }
    }
}

fn patches(shape: &Shape) -> Vec<Patch> {
    match shape {
        Shape::Box { half_extents: h } => {
            let h = Vector3::from(*h);
            let mut out = Vec::new();
            for axis in 0..3 {
                let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut u = Vector3::zeros();
                u[i] = 2.0 * h[i];
                let mut v = Vector3::zeros();
                v[j] = 2.0 * h[j];
                for sign in [-1.0, 1.0] {
                    let mut o = -h;
                    o[axis] = sign * h[axis];
                    out.push(Patch::Rect { origin: Point3::from(o), u, v });
                }
            }
            out
        }
        Shape::Cylinder { radius, height } => vec![
            Patch::Frustum { r0: *radius, z0: 0.0, r1: *radius, z1: *height },
            Patch::Disk { z: 0.0, radius: *radius },
            Patch::Disk { z: *height, radius: *radius },
        ],
        Shape::Sphere { radius } => vec![Patch::Sphere { radius: *radius }],
        Shape::Lathe { profile, .. } => {
            let mut out = Vec::new();
            if let Some(first) = profile.first() {
                if first[1].abs() < 1e-12 && first[0] > 0.0 {
                    out.push(Patch::Disk { z: 0.0, radius: first[0] });
                }
            }
            for w in profile.windows(2) {
                out.push(Patch::Frustum { r0: w[0][0], z0: w[0][1], r1: w[1][0], z1: w[1][1] });
            }
            out
        }
    }
}

fn ring(r: f64, z: f64, sectors: usize) -> Vec<Point3<f64>> {
    (0..sectors)
        .map(|k| {
            let a = TAU * k as f64 / sectors as f64;
            Point3::new(r * a.cos(), r * a.sin(), z)
        })
        .collect()
}

/// Exact convex pieces (round shapes as inscribed polygons).
fn pieces(shape: &Shape) -> Result<Vec<ConvexShape>, GeometryError> {
    let bad = |m: &str| Err(GeometryError::InvalidParameter(m.to_string()));
    match shape {
        Shape::Box { half_extents: h } => {
            if h.iter().any(|v| !(*v > 0.0)) {
                return bad("box half extents must be positive");
            }
            Ok(vec![ConvexShape::cuboid(Point3::origin(), Vector3::from(*h))])
        }
        Shape::Cylinder { radius, height } => {
            if !(*radius > 0.0 && *height > 0.0) {
                return bad("cylinder needs positive radius and height");
            }
            let mut v = ring(*radius, 0.0, SECTORS);
            v.extend(ring(*radius, *height, SECTORS));
            Ok(vec![ConvexShape::from_vertices(v)?])
        }
        Shape::Sphere { radius } => {
            if !(*radius > 0.0) {
                return bad("sphere radius must be positive");
            }
            let mut v = vec![Point3::new(0.0, 0.0, *radius), Point3::new(0.0, 0.0, -*radius)];
            for i in 1..12 {
                let polar = PI * i as f64 / 12.0;
                let mut r = ring(radius * polar.sin(), radius * polar.cos(), SECTORS);
                v.append(&mut r);
            }
            Ok(vec![ConvexShape::from_vertices(v)?])
        }
        Shape::Lathe { profile, thickness } => {
            if profile.len() < 2 || !(*thickness > 0.0) || profile.iter().any(|p| !(p[0] > *thickness)) {
                return bad("lathe needs two profile points wider than its thickness");
            }
            let sectors = 16;
            let mut out = Vec::new();
            let first = profile[0];
            let mut bottom = ring(first[0], first[1], SECTORS);
            bottom.extend(ring(first[0], first[1] + thickness, SECTORS));
            out.push(ConvexShape::from_vertices(bottom)?);
            for w in profile.windows(2) {
                let (a, b) = (w[0], w[1]);
                for k in 0..sectors {
                    let (t0, t1) = (TAU * k as f64 / sectors as f64, TAU * (k + 1) as f64 / sectors as f64);
                    let mut v = Vec::with_capacity(8);
                    for [r, z] in [a, b] {
                        for t in [t0, t1] {
                            for rr in [r, r - thickness] {
                                v.push(Point3::new(rr * t.cos(), rr * t.sin(), z));
                            }
                        }
                    }
                    out.push(ConvexShape::from_vertices(v)?);
                }
            }
            Ok(out)
        }
    }
}

/// Bowl-like lathe: flat bottom of radius `bottom`, rim of radius `rim` at
/// `height`, bulging slightly at mid height.
pub fn bowl(bottom: f64, rim: f64, height: f64) -> Shape {
    let mid = bottom + 0.75 * (rim - bottom);
    Shape::Lathe { profile: vec![[bottom, 0.0], [mid, 0.55 * height], [rim, height]], thickness: 0.003 }
}
