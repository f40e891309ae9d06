//! A place pose that is only reachable after turning a symmetric can about
//! its axis. With alternative poses disabled the same place fails.
//!
//! cargo run --release --example wrist_flip -- [seed]

use contact_lfd::execution_sim::{execute_primitive, ExecParams, WorldState};
use contact_lfd::motion_planning::KinematicChain;
use contact_lfd::scenarios::wrist_flip;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let chain = KinematicChain::franka_like();
    let (scene, policy) = wrist_flip(seed)?;
    let world = WorldState::from_scene(&scene, &chain)?;

    let p = ExecParams::default();
    let (held, pick) = execute_primitive(&policy, 0, &world, &chain, &p);
    println!("pick:  {:?}", pick.outcome);
    for (label, params) in [("with alternatives", p), ("desired pose only", ExecParams { propose_alternatives: false, ..p })] {
        let (_, r) = execute_primitive(&policy, 1, &held, &chain, &params);
        let cand = r.candidate.map(|c| format!(", candidate {c}")).unwrap_or_default();
        let msg = r.message.map(|m| format!(" ({m})")).unwrap_or_default();
        println!("place, {label}: {:?}{cand}{msg}", r.outcome);
    }
    Ok(())
}
