//! End to end: learn from one demonstration, then execute on the nominal
//! scene and on displaced / resized-bowl variants, with ICP perception.
//!
//! cargo run --release --example dishwash -- [trials]

use contact_lfd::execution_sim::{execute_policy, ExecParams, PerceptionParams, WorldState};
use contact_lfd::io::eval_table;
use contact_lfd::motion_planning::KinematicChain;
use contact_lfd::pipeline::{learn_from_demo, PipelineParams};
use contact_lfd::pose_estimation::IcpParams;
use contact_lfd::scenario::generate_demo;
use contact_lfd::scenarios::{dishwash_layout, dishwash_spec, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let chain = KinematicChain::franka_like();
    let (demo, _) = generate_demo(&dishwash_spec(1))?;
    let (_, _, policy) = learn_from_demo(&demo, &PipelineParams::default())?;
    println!("learned {} primitives from {} frames", policy.primitives.len(), demo.len());

    let perception = Some(PerceptionParams { noise_sigma: 0.0005, icp: IcpParams::default() });
    let mut results = Vec::new();
    for variant in [Variant::Nominal, Variant::Displaced, Variant::UnseenBowl, Variant::Combined] {
        for seed in 0..trials {
            let world = WorldState::from_scene(&dishwash_layout(variant, seed).scene(), &chain)?;
            let (_, mut r) = execute_policy(&policy, &world, &chain, &ExecParams { seed, perception, ..Default::default() });
            let (te, re) = r.max_key_moment_error();
            println!(
                "{:<22} seed {seed}: {} in {:.1} s, key moments within {:.2} mm / {:.2} deg",
                variant.label(),
                if r.success { "success" } else { "failure" },
                r.total_duration,
                te * 1e3,
                re.to_degrees()
            );
            r.label = Some(variant.label().into());
            results.push(r);
        }
    }
    println!("\n{}", eval_table(&results));
    Ok(())
}
