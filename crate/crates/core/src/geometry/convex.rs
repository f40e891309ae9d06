//! Convex shapes defined by vertex sets, and distance queries between them.
//!
//! Hull construction and GJK distance are delegated to `parry3d-f64`;
//! penetration depth uses a separating-axis scan over hull features.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Point3, Vector3};
use parry3d_f64::query;
use parry3d_f64::shape::ConvexPolyhedron;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose};

/// Convex hull of a vertex set, with a cached polyhedron and bounding sphere.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "ShapeRepr", into = "ShapeRepr")]
pub struct ConvexShape {
    vertices: Vec<Point3<f64>>,
    poly: Arc<ConvexPolyhedron>,
    center: Point3<f64>,
    radius: f64,
    fingerprint: u64,
    axes: Arc<SatAxes>,
}

/// Candidate separating directions of a hull, in the body frame.
#[derive(Debug, Default)]
struct SatAxes {
    face_normals: Vec<Vector3<f64>>,
    edge_dirs: Vec<Vector3<f64>>,
}

fn push_unique(list: &mut Vec<Vector3<f64>>, v: Vector3<f64>) {
    if !list.iter().any(|u| u.dot(&v).abs() > 1.0 - 1e-10) {
        list.push(v);
    }
}

impl SatAxes {
    fn of(poly: &ConvexPolyhedron) -> Self {
        let mut axes = SatAxes::default();
        for f in poly.faces() {
            push_unique(&mut axes.face_normals, f.normal.into_inner());
        }
        for e in poly.edges() {
            push_unique(&mut axes.edge_dirs, e.dir.into_inner());
        }
        axes
    }
}

#[derive(Serialize, Deserialize)]
struct ShapeRepr {
    vertices: Vec<[f64; 3]>,
}

impl From<ConvexShape> for ShapeRepr {
    fn from(s: ConvexShape) -> Self {
        ShapeRepr { vertices: s.vertices.iter().map(|p| [p.x, p.y, p.z]).collect() }
    }
}

impl TryFrom<ShapeRepr> for ConvexShape {
    type Error = GeometryError;

    fn try_from(r: ShapeRepr) -> Result<Self, Self::Error> {
        ConvexShape::from_vertices(r.vertices.into_iter().map(Point3::from).collect())
    }
}

impl fmt::Debug for ConvexShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexShape").field("vertices", &self.vertices).finish()
    }
}

impl PartialEq for ConvexShape {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

/// Four affinely independent points, or `None` when the set is flat.
fn spanning_tetrahedron(points: &[Point3<f64>]) -> Option<[usize; 4]> {
    if points.len() < 4 || points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return None;
    }
    let scale = points.iter().map(|p| p.coords.amax()).fold(1e-300, f64::max);
    let tol = 1e-9 * scale.max(1e-3);
    let a = 0;
    let b = (0..points.len()).max_by(|&i, &j| {
        (points[i] - points[a]).norm().total_cmp(&(points[j] - points[a]).norm())
    })?;
    let ab = points[b] - points[a];
    if ab.norm() <= tol {
        return None;
    }
    let line_dist = |p: &Point3<f64>| (p - points[a]).cross(&ab).norm() / ab.norm();
    let c = (0..points.len()).max_by(|&i, &j| line_dist(&points[i]).total_cmp(&line_dist(&points[j])))?;
    if line_dist(&points[c]) <= tol {
        return None;
    }
    let normal = ab.cross(&(points[c] - points[a])).normalize();
    let plane_dist = |p: &Point3<f64>| (p - points[a]).dot(&normal).abs();
    let d = (0..points.len()).max_by(|&i, &j| plane_dist(&points[i]).total_cmp(&plane_dist(&points[j])))?;
    if plane_dist(&points[d]) <= tol {
        return None;
    }
    Some([a, b, c, d])
}

impl ConvexShape {
    /// Shape whose extent is the hull of `vertices`. Needs at least four
    /// non-coplanar points.
    pub fn from_vertices(vertices: Vec<Point3<f64>>) -> Result<Self, GeometryError> {
        if spanning_tetrahedron(&vertices).is_none() {
            return Err(GeometryError::Degenerate);
        }
        let (hull_pts, tris) =
            parry3d_f64::transformation::try_convex_hull(&vertices).map_err(|_| GeometryError::Degenerate)?;
        let poly = ConvexPolyhedron::from_convex_mesh(hull_pts, &tris).ok_or(GeometryError::Degenerate)?;
        let n = vertices.len() as f64;
        let center = Point3::from(vertices.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n);
        let radius = vertices.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
        let mut fingerprint: u64 = 0xcbf29ce484222325;
        for v in vertices.iter().flat_map(|p| p.iter()) {
            fingerprint ^= v.to_bits();
            fingerprint = fingerprint.wrapping_mul(0x100000001b3);
        }
        let axes = Arc::new(SatAxes::of(&poly));
        Ok(ConvexShape { vertices, poly: Arc::new(poly), center, radius, fingerprint, axes })
    }

    /// Axis-aligned box centered on `center` with the given half extents.
    pub fn cuboid(center: Point3<f64>, half: Vector3<f64>) -> Self {
        let mut v = Vec::with_capacity(8);
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    v.push(center + Vector3::new(sx * half.x, sy * half.y, sz * half.z));
                }
            }
        }
        Self::from_vertices(v).expect("box with positive extents")
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn polyhedron(&self) -> &ConvexPolyhedron {
        &self.poly
    }

    pub fn bounding_center(&self) -> Point3<f64> {
        self.center
    }

    pub fn bounding_radius(&self) -> f64 {
        self.radius
    }

    pub fn transformed(&self, pose: &Pose) -> ConvexShape {
        ConvexShape::from_vertices(self.vertices.iter().map(|p| pose.transform_point(p)).collect())
            .expect("rigid motion keeps a non-degenerate shape")
    }

    fn order_key(&self, pose: &Pose) -> [u64; 8] {
        let q = pose.rotation.quaternion();
        [
            self.fingerprint,
            q.w.to_bits(),
            q.i.to_bits(),
            q.j.to_bits(),
            q.k.to_bits(),
            pose.translation.x.to_bits(),
            pose.translation.y.to_bits(),
            pose.translation.z.to_bits(),
        ]
    }
}

/// Hull of a point set; the result's vertices are a subset of the input.
pub fn convex_hull(points: &[Point3<f64>]) -> Result<ConvexShape, GeometryError> {
    if spanning_tetrahedron(points).is_none() {
        return Err(GeometryError::Degenerate);
    }
    let (hull_pts, _) = parry3d_f64::transformation::try_convex_hull(points).map_err(|_| GeometryError::Degenerate)?;
    ConvexShape::from_vertices(hull_pts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexDistance {
    pub separation: f64,
    pub intersecting: bool,
}

/// Orders the two posed shapes canonically so that the answer is
/// bit-identical under argument swap.
fn ordered<'a>(
    a: &'a ConvexShape,
    pa: &'a Pose,
    b: &'a ConvexShape,
    pb: &'a Pose,
) -> (&'a ConvexShape, &'a Pose, &'a ConvexShape, &'a Pose) {
    match a.order_key(pa).cmp(&b.order_key(pb)) {
        Ordering::Greater => (b, pb, a, pa),
        _ => (a, pa, b, pb),
    }
}

pub fn convex_distance(a: &ConvexShape, pa: &Pose, b: &ConvexShape, pb: &Pose) -> ConvexDistance {
    let (a, pa, b, pb) = ordered(a, pa, b, pb);
    let d = query::distance(&pa.to_isometry(), a.polyhedron(), &pb.to_isometry(), b.polyhedron())
        .expect("convex polyhedra are supported");
    ConvexDistance { separation: d.max(0.0), intersecting: d <= 0.0 }
}

/// Separation when apart, negative penetration depth when overlapping.
pub fn signed_distance(a: &ConvexShape, pa: &Pose, b: &ConvexShape, pb: &Pose) -> f64 {
    let (a, pa, b, pb) = ordered(a, pa, b, pb);
    let d = query::distance(&pa.to_isometry(), a.polyhedron(), &pb.to_isometry(), b.polyhedron()).expect("convex polyhedra are supported");
    if d > 0.0 {
        return d;
    }
    -penetration_depth(a, pa, b, pb)
}

/// Minimum translation distance separating two overlapping hulls, found by
/// testing every face normal and every edge-pair cross product.
fn penetration_depth(a: &ConvexShape, pa: &Pose, b: &ConvexShape, pb: &Pose) -> f64 {
    let pts_a: Vec<Vector3<f64>> = a.poly.points().iter().map(|p| pa.transform_point(p).coords).collect();
    let pts_b: Vec<Vector3<f64>> = b.poly.points().iter().map(|p| pb.transform_point(p).coords).collect();
    let overlap = |axis: &Vector3<f64>| {
        let (mut amin, mut amax, mut bmin, mut bmax) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &pts_a {
            let d = axis.dot(p);
            amin = amin.min(d);
            amax = amax.max(d);
        }
        for p in &pts_b {
            let d = axis.dot(p);
            bmin = bmin.min(d);
            bmax = bmax.max(d);
        }
        (amax - bmin).min(bmax - amin)
    };
    let mut depth = f64::INFINITY;
    for n in &a.axes.face_normals {
        depth = depth.min(overlap(&pa.transform_vector(n)));
    }
    for n in &b.axes.face_normals {
        depth = depth.min(overlap(&pb.transform_vector(n)));
    }
    for ea in &a.axes.edge_dirs {
        let ea = pa.transform_vector(ea);
        for eb in &b.axes.edge_dirs {
            let c = ea.cross(&pb.transform_vector(eb));
            let len = c.norm();
            if len > 1e-9 {
                depth = depth.min(overlap(&(c / len)));
            }
        }
    }
    depth.max(0.0)
}

/// Lower bound on the separation from bounding spheres alone.
pub(crate) fn sphere_gap(a: &ConvexShape, pa: &Pose, b: &ConvexShape, pb: &Pose) -> f64 {
    let ca = pa.transform_point(&a.center);
    let cb = pb.transform_point(&b.center);
    (ca - cb).norm() - a.radius - b.radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_cube_at(x: f64) -> (ConvexShape, Pose) {
        (ConvexShape::cuboid(Point3::origin(), Vector3::repeat(0.5)), Pose::from_translation(x, 0.0, 0.0))
    }

    fn cube_corners() -> Vec<Point3<f64>> {
        let mut v = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    v.push(Point3::new(x, y, z));
                }
            }
        }
        v
    }

    /// Supporting planes found by brute force over vertex triples.
    fn brute_facets(v: &[Point3<f64>]) -> Vec<(Vector3<f64>, f64)> {
        let mut planes = Vec::new();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                for k in j + 1..v.len() {
                    let n = (v[j] - v[i]).cross(&(v[k] - v[i]));
                    if n.norm() < 1e-12 {
                        continue;
                    }
                    let n = n.normalize();
                    let off = n.dot(&v[i].coords);
                    let side: Vec<f64> = v.iter().map(|p| n.dot(&p.coords) - off).collect();
                    if side.iter().all(|s| *s <= 1e-12) {
                        planes.push((n, off));
                    } else if side.iter().all(|s| *s >= -1e-12) {
                        planes.push((-n, -off));
                    }
                }
            }
        }
        planes
    }

    #[test]
    fn cube_hull_has_eight_vertices() {
        let h = convex_hull(&cube_corners()).unwrap();
        assert_eq!(h.vertices().len(), 8);
    }

    #[test]
    fn interior_point_is_excluded() {
        let mut pts = cube_corners();
        pts.push(Point3::new(0.5, 0.5, 0.5));
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 8);
        assert!(!h.vertices().contains(&Point3::new(0.5, 0.5, 0.5)));
    }

    #[test]
    fn random_points_satisfy_halfspaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let pts: Vec<_> = (0..100).map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen())).collect();
            let h = convex_hull(&pts).unwrap();
            for v in h.vertices() {
                assert!(pts.contains(v), "hull vertex not from input");
            }
            let planes = brute_facets(h.vertices());
            assert!(planes.len() >= 4);
            for p in &pts {
                for (n, off) in &planes {
                    assert!(n.dot(&p.coords) - off <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn coplanar_is_degenerate() {
        let flat: Vec<_> = (0..10).map(|i| Point3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(matches!(convex_hull(&flat), Err(GeometryError::Degenerate)));
        let line: Vec<_> = (0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(convex_hull(&line), Err(GeometryError::Degenerate)));
    }

    #[test]
    fn cubes_three_meters_apart() {
        let (a, pa) = unit_cube_at(0.0);
        let (b, pb) = unit_cube_at(3.0);
        let d = convex_distance(&a, &pa, &b, &pb);
        assert!((d.separation - 2.0).abs() < 1e-9);
        assert!(!d.intersecting);
        let same = convex_distance(&a, &pa, &a, &pa);
        assert!(same.intersecting);
        assert_eq!(same.separation, 0.0);
        assert!(signed_distance(&a, &pa, &a, &pa) < -0.9);
    }

    #[test]
    fn distance_matches_surface_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let random_shape = |rng: &mut ChaCha8Rng| {
            let pts: Vec<_> = (0..12)
                .map(|_| Point3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)))
                .collect();
            convex_hull(&pts).unwrap()
        };
        for _ in 0..8 {
            let a = random_shape(&mut rng);
            let b = random_shape(&mut rng);
            let pa = Pose::from_xyz_rpy([0.0, 0.0, 0.0], [rng.gen(), rng.gen(), rng.gen()]);
            let pb = Pose::from_xyz_rpy([rng.gen_range(0.5..0.8), rng.gen_range(-0.2..0.2), 0.0], [rng.gen(), 0.3, 0.1]);
            let got = convex_distance(&a, &pa, &b, &pb).separation;

            // dense sampling of each hull surface via triangle fans over brute facets
            let sample = |s: &ConvexShape, pose: &Pose| -> Vec<Point3<f64>> {
                let v = s.vertices();
                let mut out = Vec::new();
                for (n, off) in brute_facets(v) {
                    let on: Vec<_> = v.iter().filter(|p| (n.dot(&p.coords) - off).abs() < 1e-9).collect();
                    for i in 1..on.len() {
                        for j in i + 1..on.len() {
                            let steps = 60;
                            for u in 0..=steps {
                                for w in 0..=(steps - u) {
                                    let (fu, fw) = (u as f64 / steps as f64, w as f64 / steps as f64);
                                    let p = on[0].coords * (1.0 - fu - fw) + on[i].coords * fu + on[j].coords * fw;
                                    out.push(pose.transform_point(&Point3::from(p)));
                                }
                            }
                        }
                    }
                }
                out
            };
            let sa = sample(&a, &pa);
            let sb = sample(&b, &pb);
            let tree = crate::geometry::kdtree::KdTree::new(&sb);
            let est = sa.iter().map(|p| tree.nearest(p).unwrap().1).fold(f64::INFINITY, f64::min).sqrt();
            assert!(est + 1e-12 >= got - 1e-9, "sampling can only over-estimate");
            assert!((est - got).abs() < 1e-3, "sampled {est} vs gjk {got}");
        }
    }

    #[test]
    fn symmetric_and_rigid_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let pts_a: Vec<_> = (0..10).map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen())).collect();
            let pts_b: Vec<_> = (0..10).map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen())).collect();
            let a = convex_hull(&pts_a).unwrap();
            let b = convex_hull(&pts_b).unwrap();
            let pa = Pose::from_xyz_rpy([rng.gen(), 0.0, 0.0], [rng.gen(), rng.gen(), 0.0]);
            let pb = Pose::from_xyz_rpy([1.0 + rng.gen::<f64>(), 0.5, 0.0], [0.0, rng.gen(), rng.gen()]);
            let ab = convex_distance(&a, &pa, &b, &pb);
            let ba = convex_distance(&b, &pb, &a, &pa);
            assert!((ab.separation - ba.separation).abs() <= 1e-12);
            let common = Pose::from_xyz_rpy([3.0, -2.0, 1.0], [0.7, -0.4, 1.9]);
            let moved = convex_distance(&a, &(common * pa), &b, &(common * pb));
            assert!((moved.separation - ab.separation).abs() < 1e-9);
        }
    }
}
