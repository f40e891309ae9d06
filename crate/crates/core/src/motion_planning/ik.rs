use nalgebra::{DVector, Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{JointConfig, KinematicChain, PlanningError};
use crate::geometry::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkParams {
    pub tol_pos: f64,
    pub tol_rot: f64,
    pub max_restarts: usize,
    pub max_iterations: usize,
    pub damping: f64,
    pub step_clamp: f64,
    pub seed: u64,
}

impl Default for IkParams {
    fn default() -> Self {
        IkParams {
            tol_pos: 1e-4,
            tol_rot: 1e-3,
            max_restarts: 100,
            max_iterations: 300,
            damping: 0.1,
            step_clamp: 0.2,
            seed: 0,
        }
    }
}

/// Position error (m) and rotation error (rad) of `q`'s tool against `target`.
pub fn tool_error(chain: &KinematicChain, q: &[f64], target: &Pose) -> Result<(f64, f64), PlanningError> {
    let t = chain.tool_pose(q)?;
    Ok((t.translation_distance(target), t.rotation_angle_to(target)))
}

fn descend(chain: &KinematicChain, target: &Pose, mut q: JointConfig, p: &IkParams) -> Option<JointConfig> {
    let lambda2 = p.damping * p.damping;
    for _ in 0..=p.max_iterations {
        let fk = chain.forward_kinematics(&q).ok()?;
        let dp = target.translation - fk.tool.translation;
        let dr = (target.rotation * fk.tool.rotation.inverse()).scaled_axis();
        if dp.norm() < p.tol_pos && dr.norm() < p.tol_rot {
            return Some(q);
        }
        let err = Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z);
        let jac = chain.jacobian(&fk);
        let jjt: Matrix6<f64> = &jac * jac.transpose() + Matrix6::identity() * lambda2;
        let y = jjt.cholesky()?.solve(&err);
        let mut dq: DVector<f64> = jac.transpose() * y;
        let m = dq.amax();
        if m > p.step_clamp {
            dq *= p.step_clamp / m;
        }
        for (v, d) in q.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        chain.clamp(&mut q);
    }
    None
}

/// Damped least squares from `seed`, then from uniform random
/// configurations. Deterministic for a given `p.seed`.
pub fn inverse_kinematics(
    chain: &KinematicChain,
    target: &Pose,
    seed: &[f64],
    p: &IkParams,
) -> Result<JointConfig, PlanningError> {
    inverse_kinematics_filtered(chain, target, seed, p, |_| true)
}

/// As [`inverse_kinematics`], but a converged solution is only returned when
/// `accept` approves it; rejected solutions count as failed attempts.
pub fn inverse_kinematics_filtered(
    chain: &KinematicChain,
    target: &Pose,
    seed: &[f64],
    p: &IkParams,
    mut accept: impl FnMut(&[f64]) -> bool,
) -> Result<JointConfig, PlanningError> {
    chain.check_dims(seed)?;
    if !(p.tol_pos > 0.0 && p.tol_rot > 0.0) {
        return Err(PlanningError::InvalidParameter("IK tolerances must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut start: JointConfig = seed.to_vec();
    chain.clamp(&mut start);
    for attempt in 0..=p.max_restarts {
        if attempt > 0 {
            start = chain.joints.iter().map(|j| rng.gen_range(j.limits.0..=j.limits.1)).collect();
        }
        if let Some(q) = descend(chain, target, start.clone(), p) {
            if accept(&q) {
                return Ok(q);
            }
        }
    }
    Err(PlanningError::NoSolution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_q(chain: &KinematicChain, rng: &mut ChaCha8Rng) -> JointConfig {
        chain.joints.iter().map(|j| rng.gen_range(j.limits.0..=j.limits.1)).collect()
    }

    #[test]
    fn seed_at_solution_returns_immediately() {
        let chain = KinematicChain::franka_like();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_q(&chain, &mut rng);
        let target = chain.tool_pose(&q).unwrap();
        assert_eq!(inverse_kinematics(&chain, &target, &q, &IkParams::default()).unwrap(), q);
    }

    #[test]
    fn reachable_targets_from_random_seeds() {
        let chain = KinematicChain::franka_like();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = IkParams::default();
        let mut ok = 0;
        for i in 0..50 {
            let target = chain.tool_pose(&random_q(&chain, &mut rng)).unwrap();
            let seed = random_q(&chain, &mut rng);
            if let Ok(q) = inverse_kinematics(&chain, &target, &seed, &IkParams { seed: i, ..p }) {
                let (ep, er) = tool_error(&chain, &q, &target).unwrap();
                assert!(ep < p.tol_pos && er < p.tol_rot && chain.within_limits(&q));
                ok += 1;
            }
        }
        assert!(ok >= 49, "{ok}/50");
    }

    #[test]
    fn unreachable_target() {
        let chain = KinematicChain::franka_like();
        let p = IkParams { max_restarts: 3, ..Default::default() };
        let r = inverse_kinematics(&chain, &Pose::from_translation(10.0, 0.0, 0.0), &chain.mid_config(), &p);
        assert_eq!(r, Err(PlanningError::NoSolution));
    }

    #[test]
    fn deterministic_for_seed() {
        let chain = KinematicChain::franka_like();
        let target = Pose::from_xyz_rpy([0.5, 0.1, 0.3], [std::f64::consts::PI, 0.0, 0.3]);
        let p = IkParams { seed: 11, ..Default::default() };
        let a = inverse_kinematics(&chain, &target, &chain.mid_config(), &p).unwrap();
        let b = inverse_kinematics(&chain, &target, &chain.mid_config(), &p).unwrap();
        assert_eq!(a, b);
    }
}
