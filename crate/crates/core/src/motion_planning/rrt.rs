use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{in_collision, JointConfig, JointPath, KinematicChain, PlanningError, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrtParams {
    /// Largest per-joint change between tree nodes (rad or m).
    pub step: f64,
    pub max_iters: usize,
    pub rng_seed: u64,
    pub goal_bias: f64,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams { step: 0.1, max_iters: 50_000, rng_seed: 0, goal_bias: 0.05 }
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> JointConfig {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

/// Samples `a + (b - a) i / n` for `i = 0..=n` with `n = ceil(|b - a|_inf / resolution)`.
pub fn segment_samples(a: &[f64], b: &[f64], resolution: f64) -> Vec<JointConfig> {
    let n = (linf(a, b) / resolution).ceil().max(1.0) as usize;
    (0..=n).map(|i| lerp(a, b, i as f64 / n as f64)).collect()
}

/// Whether every sample of the straight segment at `resolution` is free.
pub fn segment_free(chain: &KinematicChain, scene: &Scene, a: &[f64], b: &[f64], resolution: f64) -> bool {
    segment_samples(a, b, resolution).iter().all(|q| !in_collision(chain, q, scene))
}

/// Whether the whole path is free at `resolution`.
pub fn path_free(chain: &KinematicChain, scene: &Scene, path: &JointPath, resolution: f64) -> bool {
    path.waypoints.windows(2).all(|w| segment_free(chain, scene, &w[0], &w[1], resolution))
}

struct Tree {
    nodes: Vec<JointConfig>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: JointConfig) -> Self {
        Tree { nodes: vec![root], parent: vec![0] }
    }

    fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = dist2(n, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn push(&mut self, q: JointConfig, parent: usize) -> usize {
        self.nodes.push(q);
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    fn branch(&self, mut i: usize) -> Vec<JointConfig> {
        let mut out = vec![self.nodes[i].clone()];
        while i != 0 {
            i = self.parent[i];
            out.push(self.nodes[i].clone());
        }
        out
    }
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

struct Planner<'a> {
    chain: &'a KinematicChain,
    scene: &'a Scene,
    step: f64,
}

impl Planner<'_> {
    /// Edges are checked at half the step so that every returned path
    /// survives re-validation at that resolution.
    fn edge_free(&self, a: &[f64], b: &[f64]) -> bool {
        segment_samples(a, b, self.step / 2.0).iter().skip(1).all(|q| !in_collision(self.chain, q, self.scene))
    }

    fn extend(&self, tree: &mut Tree, target: &[f64]) -> Extend {
        let near = tree.nearest(target);
        let from = &tree.nodes[near];
        let d = linf(from, target);
        let (q, reached) = if d <= self.step {
            (target.to_vec(), true)
        } else {
            (lerp(from, target, self.step / d), false)
        };
        if !self.edge_free(from, &q) {
            return Extend::Trapped;
        }
        let i = tree.push(q, near);
        if reached {
            Extend::Reached(i)
        } else {
            Extend::Advanced(i)
        }
    }

    fn connect(&self, tree: &mut Tree, target: &[f64]) -> Extend {
        loop {
            match self.extend(tree, target) {
                Extend::Advanced(_) => continue,
                other => return other,
            }
        }
    }

    fn shortcut(&self, mut path: Vec<JointConfig>) -> Vec<JointConfig> {
        let mut out = vec![path.remove(0)];
        let mut rest = path;
        while !rest.is_empty() {
            let from = out.last().expect("non-empty").clone();
            let mut j = rest.len() - 1;
            while j > 0 && !self.edge_free(&from, &rest[j]) {
                j -= 1;
            }
            out.push(rest[j].clone());
            rest.drain(..=j);
        }
        out
    }
}

/// Bidirectional RRT with the connect heuristic and greedy shortcutting.
pub fn plan_rrt_connect(
    chain: &KinematicChain,
    scene: &Scene,
    q_start: &[f64],
    q_goal: &[f64],
    params: &RrtParams,
) -> Result<JointPath, PlanningError> {
    chain.check_dims(q_start)?;
    chain.check_dims(q_goal)?;
    if !(params.step > 0.0) {
        return Err(PlanningError::InvalidParameter("step must be positive"));
    }
    if !chain.within_limits(q_start) || in_collision(chain, q_start, scene) {
        return Err(PlanningError::StartInCollision);
    }
    if !chain.within_limits(q_goal) || in_collision(chain, q_goal, scene) {
        return Err(PlanningError::GoalInCollision);
    }
    let planner = Planner { chain, scene, step: params.step };
    if planner.edge_free(q_start, q_goal) {
        return Ok(JointPath { waypoints: vec![q_start.to_vec(), q_goal.to_vec()] });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut a = Tree::new(q_start.to_vec());
    let mut b = Tree::new(q_goal.to_vec());
    let mut a_is_start = true;
    for _ in 0..params.max_iters {
        let sample: JointConfig = if rng.gen::<f64>() < params.goal_bias {
            b.nodes[0].clone()
        } else {
            chain.joints.iter().map(|j| rng.gen_range(j.limits.0..=j.limits.1)).collect()
        };
        let new = match planner.extend(&mut a, &sample) {
            Extend::Reached(i) | Extend::Advanced(i) => Some(i),
            Extend::Trapped => None,
        };
        if let Some(i) = new {
            let q = a.nodes[i].clone();
            if let Extend::Reached(j) = planner.connect(&mut b, &q) {
                let mut first = a.branch(i);
                first.reverse();
                let second = b.branch(j);
                first.extend(second.into_iter().skip(1));
                if !a_is_start {
                    first.reverse();
                }
                let waypoints = planner.shortcut(first);
                return Ok(JointPath { waypoints });
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    Err(PlanningError::Timeout { iters: params.max_iters })
}
