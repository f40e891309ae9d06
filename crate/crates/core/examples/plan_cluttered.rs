//! IK, RRT-Connect and time parameterization on a random cluttered scene.
//!
//! cargo run --release --example plan_cluttered -- [seed]

use contact_lfd::motion_planning::*;
use contact_lfd::scenarios::cluttered_scene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let chain = KinematicChain::franka_like();
    let (scene, start, goal) = cluttered_scene(&chain, seed);
    println!("{} obstacles, {} dof", scene.objects.len(), chain.dof());

    // the goal as a tool pose, solved back to joints from the middle of the range
    let target = chain.tool_pose(&goal)?;
    let q = inverse_kinematics(&chain, &target, &chain.mid_config(), &IkParams::default())?;
    let (dp, dr) = tool_error(&chain, &q, &target)?;
    println!("IK: {:.2e} m / {:.2e} rad, in collision: {}", dp, dr, in_collision(&chain, &q, &scene));

    let params = RrtParams { rng_seed: seed, ..Default::default() };
    let path = plan_rrt_connect(&chain, &scene, &start, &goal, &params)?;
    println!("RRT-Connect: {} waypoints, free at half step: {}", path.waypoints.len(), path_free(&chain, &scene, &path, params.step / 2.0));

    let traj = time_parameterize(&path, &chain)?;
    let grid = resample(&traj, 1000.0)?;
    println!("trajectory: {:.3} s, {} samples at 1 kHz", traj.duration(), grid.len());
    Ok(())
}
