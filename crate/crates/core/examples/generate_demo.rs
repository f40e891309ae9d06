//! Renders a scripted pick-and-place demonstration and writes it to disk.
//!
//! cargo run --example generate_demo -- [out_dir] [seed]

use std::path::PathBuf;

use contact_lfd::io::{load_demo, save_demo, save_truth};
use contact_lfd::scenario::generate_demo;
use contact_lfd::scenarios::pick_place_spec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lfd-demo"));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let spec = pick_place_spec(seed);
    let (demo, truth) = generate_demo(&spec)?;
    save_demo(&demo, &out)?;
    save_truth(&truth, &out)?;

    println!("{} frames at {} Hz -> {}", demo.len(), demo.meta.frame_rate, out.display());
    for name in demo.objects() {
        let seen = demo.frames.iter().filter(|f| f.clouds.contains_key(name)).count();
        println!("  {name:<8} model {:>5} pts, visible in {seen} frames", demo.meta.models[name].len());
    }
    let hand = demo.frames.iter().filter(|f| f.hand.is_some()).count();
    println!("  hand visible in {hand} frames");
    println!("truth: {} primitives", truth.primitives.len());

    assert_eq!(load_demo(&out)?, demo, "round trip");
    Ok(())
}
