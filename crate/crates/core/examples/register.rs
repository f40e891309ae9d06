//! ICP: recover a known rigid offset of an object model from a noisy view.
//!
//! cargo run --example register

use contact_lfd::geometry::Pose;
use contact_lfd::pose_estimation::{icp_register, IcpParams};
use contact_lfd::scenarios::{object_model, sink_spec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = object_model(&sink_spec(), 0)?.cloud;
    let truth = Pose::from_xyz_rpy([0.03, -0.02, 0.01], [0.1, -0.05, 0.3]);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.0005)?;
    let mut observed = model.transformed(&truth);
    for p in &mut observed.points {
        p.coords += nalgebra::Vector3::from_fn(|_, _| noise.sample(&mut rng));
    }

    let r = icp_register(&model, &observed, &Pose::identity(), &IcpParams::default())?;
    println!("{} model points, {} observed", model.len(), observed.len());
    println!("iterations {}, fitness {:.3}, rmse {:.2} mm", r.rmse_history.len(), r.fitness, r.rmse_history.last().unwrap_or(&f64::NAN) * 1e3);
    println!(
        "error vs truth: {:.2} mm, {:.3} deg",
        r.pose.translation_distance(&truth) * 1e3,
        r.pose.rotation_angle_to(&truth).to_degrees()
    );
    Ok(())
}
