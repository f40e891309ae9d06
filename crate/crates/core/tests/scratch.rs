use contact_lfd::execution_sim::*;
use contact_lfd::motion_planning::KinematicChain;
use contact_lfd::pipeline::*;
use contact_lfd::scenario::generate_demo;
use contact_lfd::scenarios::*;
use std::time::Instant;

#[test]
fn dish() {
    let chain = KinematicChain::franka_like();
    let (demo, _) = generate_demo(&dishwash_spec(1)).unwrap();
    let (_, _, policy) = learn_from_demo(&demo, &PipelineParams::default()).unwrap();
    for v in Variant::ALL {
        for seed in 0..10 {
            let t = Instant::now();
            let lay = dishwash_layout(v, seed);
            let world = WorldState::from_scene(&lay.scene(), &chain).unwrap();
            let p = ExecParams { seed, ..Default::default() };
            let (_, r) = execute_policy(&policy, &world, &chain, &p);
            let fails: Vec<_> = r.primitives.iter().filter(|p| p.outcome != Outcome::Success || p.key_moments.iter().any(|k| !k.contacts_ok)).map(|p| format!("{} {:?} {:?} {:?}", p.index, p.outcome, p.message, p.key_moments.iter().filter(|k| !k.contacts_ok).map(|k| k.frame).collect::<Vec<_>>())).collect();
            let (te, re) = r.max_key_moment_error();
            eprintln!("{} {seed}: ok={} err {:.2}mm {:.2}deg {:?} {:?} | {:?}", v.label(), r.success, te * 1e3, re.to_degrees(), lay, fails, t.elapsed());
        }
    }
}
