//! Exact nearest-neighbour queries over a fixed 3D point set.
//!
//! The tree is an implicit balanced layout: each range `[lo, hi)` of the
//! permuted index array stores its splitting point at the midpoint. Ties on
//! distance are broken by the smaller point index so that every query is
//! deterministic.

use nalgebra::Point3;

#[inline]
pub(crate) fn dist2(a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Point3<f64>>,
    order: Vec<usize>,
    axes: Vec<u8>,
    /// Bounding box of the range whose splitting point sits at each slot.
    boxes: Vec<([f64; 3], [f64; 3])>,
}

impl KdTree {
    pub fn new(points: &[Point3<f64>]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            axes: vec![0; points.len()],
            boxes: vec![([0.0; 3], [0.0; 3]); points.len()],
        };
        tree.build(0, points.len());
        tree
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi <= lo {
            return;
        }
        if hi == lo + 1 {
            let p = self.points[self.order[lo]];
            self.boxes[lo] = ([p.x, p.y, p.z], [p.x, p.y, p.z]);
            return;
        }
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in &self.order[lo..hi] {
            for a in 0..3 {
                min[a] = min[a].min(self.points[i][a]);
                max[a] = max[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (max[a] - min[a]).total_cmp(&(max[b] - min[b])))
            .unwrap_or(0);
        let mid = (lo + hi) / 2;
        self.boxes[mid] = (min, max);
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&i, &j| {
            pts[i][axis].total_cmp(&pts[j][axis]).then(i.cmp(&j))
        });
        self.axes[mid] = axis as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point3<f64> {
        &self.points[i]
    }

    /// Index and squared distance of the closest point, or `None` for an empty tree.
    pub fn nearest(&self, q: &Point3<f64>) -> Option<(usize, f64)> {
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, self.points.len(), q, &mut best);
        (best.0 != usize::MAX).then_some(best)
    }

    fn box_dist2(&self, slot: usize, q: &Point3<f64>) -> f64 {
        let (min, max) = &self.boxes[slot];
        let mut d2 = 0.0;
        for a in 0..3 {
            let d = (min[a] - q[a]).max(q[a] - max[a]).max(0.0);
            d2 += d * d;
        }
        d2
    }

    /// Closest point strictly within squared distance `max_d2`, if any.
    pub fn nearest_within(&self, q: &Point3<f64>, max_d2: f64) -> Option<(usize, f64)> {
        let mut best = (usize::MAX, max_d2);
        self.nearest_rec(0, self.points.len(), q, &mut best);
        (best.0 != usize::MAX).then_some(best)
    }

    fn nearest_rec(&self, lo: usize, hi: usize, q: &Point3<f64>, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        if self.box_dist2(mid, q) > best.1 {
            return;
        }
        let i = self.order[mid];
        let d2 = dist2(&self.points[i], q);
        if d2 < best.1 || (d2 == best.1 && i < best.0) {
            *best = (i, d2);
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - self.points[i][axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.nearest_rec(near.0, near.1, q, best);
        if diff * diff <= best.1 {
            self.nearest_rec(far.0, far.1, q, best);
        }
    }

    /// The `k` closest points as `(index, squared distance)`, nearest first.
    pub fn knn(&self, q: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut heap: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k > 0 {
            self.knn_rec(0, self.points.len(), q, k, &mut heap);
        }
        heap
    }

    fn knn_rec(&self, lo: usize, hi: usize, q: &Point3<f64>, k: usize, out: &mut Vec<(usize, f64)>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.order[mid];
        let d2 = dist2(&self.points[i], q);
        let worse = |a: &(usize, f64), b: &(usize, f64)| a.1 > b.1 || (a.1 == b.1 && a.0 > b.0);
        if out.len() < k || worse(out.last().unwrap(), &(i, d2)) {
            let pos = out.partition_point(|e| !worse(e, &(i, d2)));
            out.insert(pos, (i, d2));
            out.truncate(k);
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - self.points[i][axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.knn_rec(near.0, near.1, q, k, out);
        if out.len() < k || diff * diff <= out.last().unwrap().1 {
            self.knn_rec(far.0, far.1, q, k, out);
        }
    }

    /// Indices of all points within `radius` (inclusive), in ascending index order.
    pub fn within(&self, q: &Point3<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.within_rec(0, self.points.len(), q, radius * radius, &mut out);
        out.sort_unstable();
        out
    }

    fn within_rec(&self, lo: usize, hi: usize, q: &Point3<f64>, r2: f64, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.order[mid];
        if dist2(&self.points[i], q) <= r2 {
            out.push(i);
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - self.points[i][axis];
        if diff <= 0.0 || diff * diff <= r2 {
            self.within_rec(lo, mid, q, r2, out);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.within_rec(mid + 1, hi, q, r2, out);
        }
    }
}
