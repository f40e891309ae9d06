//! Density-based clustering (DBSCAN semantics).
//!
//! A point is *core* when at least `min_pts` points (itself included) lie
//! within `eps`. Clusters are the connected components of core points under
//! the `eps` adjacency. A non-core point within `eps` of some core point joins
//! the cluster of its nearest core neighbour, so membership never depends on
//! the order the input arrives in.

use std::cmp::Ordering;

use nalgebra::Point3;

use super::kdtree::{dist2, KdTree};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Clustering {
    /// Each cluster lists input indices in ascending order; clusters are
    /// ordered by their smallest index.
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

pub fn cluster(points: &[Point3<f64>], eps: f64, min_pts: usize) -> Clustering {
    let n = points.len();
    if n == 0 {
        return Clustering::default();
    }
    let tree = KdTree::new(points);
    let neighbours: Vec<Vec<usize>> = points.iter().map(|p| tree.within(p, eps)).collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts.max(1)).collect();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in (0..n).filter(|&i| core[i]) {
        for &j in neighbours[i].iter().filter(|&&j| j > i && core[j]) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut root_of = vec![usize::MAX; n];
    for i in 0..n {
        if core[i] {
            root_of[i] = find(&mut parent, i);
        }
    }
    for i in (0..n).filter(|&i| !core[i]) {
        let best = neighbours[i]
            .iter()
            .filter(|&&j| core[j])
            .min_by(|&&a, &&b| {
                dist2(&points[i], &points[a])
                    .total_cmp(&dist2(&points[i], &points[b]))
                    .then_with(|| lex(&points[a], &points[b]))
            })
            .copied();
        if let Some(j) = best {
            root_of[i] = root_of[j];
        }
    }

    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let mut noise = Vec::new();
    for (i, &r) in root_of.iter().enumerate() {
        if r == usize::MAX {
            noise.push(i);
        } else {
            by_root.entry(r).or_default().push(i);
        }
    }
    let mut clusters: Vec<Vec<usize>> = by_root.into_values().collect();
    clusters.sort_by_key(|c| c[0]);
    Clustering { clusters, noise }
}

fn lex(a: &Point3<f64>, b: &Point3<f64>) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    /// Connected components of the eps-graph, computed by exhaustive pairwise scan.
    fn eps_components(points: &[Point3<f64>], eps: f64) -> Vec<BTreeSet<usize>> {
        let n = points.len();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                comp.insert(i);
                for j in 0..n {
                    if !seen[j] && (points[i] - points[j]).norm() <= eps {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    fn blob(center: [f64; 3], n: usize, spread: f64) -> Vec<Point3<f64>> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.618;
                Point3::new(
                    center[0] + spread * t.sin(),
                    center[1] + spread * (1.7 * t).cos(),
                    center[2] + spread * (2.3 * t).sin(),
                )
            })
            .collect()
    }

    #[test]
    fn two_separated_blobs() {
        let eps = 0.01;
        let mut pts = blob([0.0, 0.0, 0.0], 60, 0.01);
        pts.extend(blob([0.1 + 0.04, 0.0, 0.0], 60, 0.01));
        let got = cluster(&pts, eps, 3);
        let oracle = eps_components(&pts, eps);
        assert_eq!(oracle.len(), 2);
        assert_eq!(got.clusters.len(), 2);
        let got_sets: Vec<BTreeSet<usize>> = got.clusters.iter().map(|c| c.iter().copied().collect()).collect();
        for c in &oracle {
            assert!(got_sets.contains(c));
        }
    }

    #[test]
    fn empty_and_singleton() {
        assert_eq!(cluster(&[], 0.01, 5), Clustering::default());
        let one = cluster(&[Point3::new(1.0, 2.0, 3.0)], 0.01, 1);
        assert_eq!(one.clusters, vec![vec![0]]);
        assert!(one.noise.is_empty());
    }

    #[test]
    fn sparse_points_are_noise() {
        let pts: Vec<_> = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let c = cluster(&pts, 0.1, 2);
        assert!(c.clusters.is_empty());
        assert_eq!(c.noise, vec![0, 1, 2, 3, 4]);
    }

    fn canonical(c: &Clustering, perm: &[usize]) -> (BTreeSet<BTreeSet<usize>>, BTreeSet<usize>) {
        let clusters = c.clusters.iter().map(|cl| cl.iter().map(|&i| perm[i]).collect()).collect();
        let noise = c.noise.iter().map(|&i| perm[i]).collect();
        (clusters, noise)
    }

    proptest! {
        #[test]
        fn partitions_input_and_ignores_order(
            raw in prop::collection::vec((0.0..0.2f64, 0.0..0.2f64, 0.0..0.05f64), 0..80),
            min_pts in 1usize..6,
            rot in 0usize..80,
        ) {
            let pts: Vec<_> = raw.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
            let c = cluster(&pts, 0.03, min_pts);
            let mut all: Vec<usize> = c.clusters.iter().flatten().chain(&c.noise).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());

            // reversed-and-rotated input order gives the same partition
            let n = pts.len();
            let perm: Vec<usize> = (0..n).map(|i| (n - 1 - i + rot) % n.max(1)).collect();
            let shuffled: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
            let c2 = cluster(&shuffled, 0.03, min_pts);
            let identity: Vec<usize> = (0..n).collect();
            prop_assert_eq!(canonical(&c, &identity), canonical(&c2, &perm));
        }
    }
}
