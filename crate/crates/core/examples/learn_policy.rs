//! Learns the dishwash policy from one demonstration and prints what each
//! primitive stores.
//!
//! cargo run --release --example learn_policy -- [policy_out.json]

use contact_lfd::io::save_policy;
use contact_lfd::pipeline::{learn_from_demo, PipelineParams};
use contact_lfd::primitive_learning::PrimitiveParams;
use contact_lfd::scenario::generate_demo;
use contact_lfd::scenarios::dishwash_spec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (demo, _) = generate_demo(&dishwash_spec(1))?;
    let (_, _, policy) = learn_from_demo(&demo, &PipelineParams::default())?;

    for (i, p) in policy.primitives.iter().enumerate() {
        let what = match &p.params {
            PrimitiveParams::Make(m) => {
                let l = &m.effective()[0].0;
                format!("grasp at ({:.3}, {:.3}, {:.3}) in model frame", l.point.x, l.point.y, l.point.z)
            }
            PrimitiveParams::Maintain(m) => {
                let refs: Vec<_> = m.key_moments.iter().map(|k| format!("{}@{}", k.reference, k.frame)).collect();
                format!("{} key moments [{}], {} track samples", m.key_moments.len(), refs.join(", "), m.dense_track.len())
            }
            PrimitiveParams::Break(b) => {
                let t = b.effective().translation;
                format!("release relative to {} at ({:.3}, {:.3}, {:.3})", b.reference, t.x, t.y, t.z)
            }
            PrimitiveParams::Unlearned => "unlearned".into(),
        };
        println!("{i:>2} {:<16} {:<7} {:>9}  {what}", format!("{:?}", p.kind), p.target, format!("{:?}", p.span));
    }

    if let Some(out) = std::env::args().nth(1) {
        save_policy(&policy, out.as_ref())?;
        println!("policy written to {out}");
    }
    Ok(())
}
