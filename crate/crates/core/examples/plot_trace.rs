//! Writes SVG plots of a contact timeline and of an executed joint trace.
//!
//! cargo run --release --example plot_trace -- [out_dir]

use std::path::{Path, PathBuf};

use contact_lfd::execution_sim::{execute_policy, ExecParams, WorldState};
use contact_lfd::io::{plot_csv, timeline_csv, trace_csv, PlotOptions};
use contact_lfd::motion_planning::KinematicChain;
use contact_lfd::pipeline::segment_demo;
use contact_lfd::scenario::generate_demo;
use contact_lfd::scenarios::{pick_place_spec, wrist_flip};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;
    let opts = PlotOptions::default();

    let (demo, _) = generate_demo(&pick_place_spec(1))?;
    let seg = segment_demo(&demo, &opts.thresholds)?;
    let timeline = out.join("timeline.svg");
    std::fs::write(&timeline, plot_csv(&timeline_csv(&seg.contacts), Path::new("timeline.csv"), &opts)?)?;

    let chain = KinematicChain::franka_like();
    let (scene, policy) = wrist_flip(0)?;
    let world = WorldState::from_scene(&scene, &chain)?;
    let (_, r) = execute_policy(&policy, &world, &chain, &ExecParams { record_trace: true, ..Default::default() });
    let trace = out.join("trace.svg");
    std::fs::write(&trace, plot_csv(&trace_csv(&r), Path::new("trace.csv"), &opts)?)?;

    println!("{}\n{}", timeline.display(), trace.display());
    Ok(())
}
