//! Contact timelines and Make/Maintain/Break segmentation of a demonstration.
//!
//! cargo run --example segment -- [seed] [d_make] [d_break]

use contact_lfd::contact_analysis::HysteresisParams;
use contact_lfd::io::timeline_csv;
use contact_lfd::pipeline::segment_demo;
use contact_lfd::scenario::generate_demo;
use contact_lfd::scenarios::pick_place_spec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let d_make = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(0.005);
    let d_break = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(0.010);

    let (demo, truth) = generate_demo(&pick_place_spec(seed))?;
    let seg = segment_demo(&demo, &HysteresisParams::new(d_make, d_break)?)?;

    println!("hand contact intervals:");
    for (name, s) in &seg.contacts.hand {
        println!("  {name:<8} {:?}", s.timeline.intervals());
    }
    println!("object contact intervals:");
    for s in &seg.contacts.objects {
        let (a, b) = &s.timeline.pair;
        println!("  {a}-{b}: {:?}", s.timeline.intervals());
    }
    println!("\n{:<16} {:<8} {:>10} {:>10}", "primitive", "target", "span", "truth");
    for (i, p) in seg.primitives.iter().enumerate() {
        let t = truth.primitives.get(i).map(|t| format!("{:?}", t.span)).unwrap_or_default();
        println!("{:<16} {:<8} {:>10} {:>10}", format!("{:?}", p.kind), p.target, format!("{:?}", p.span), t);
    }

    let csv = timeline_csv(&seg.contacts);
    println!("\ntimeline.csv: {} rows, first: {}", csv.lines().count() - 1, csv.lines().nth(1).unwrap_or(""));
    Ok(())
}
