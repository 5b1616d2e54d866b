//! Recovers a misaligned four-beam rig from noisy spot positions.

use laserscale::laser::{builtin_config, calibrate_rig, CalibrationObservation, RigConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = builtin_config(RigConfig::C);
    let noise = Normal::new(0.0, 0.001)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // spots measured on a target at eight depths between 1 and 4.5 m
    let mut obs = Vec::new();
    for b in &truth.beams {
        for i in 0..8 {
            let z = 1.0 + 0.5 * i as f64;
            let p = b.point_at(z / b.direction.z);
            let jitter = laserscale::geometry::Vec3::from_fn(|_, _| noise.sample(&mut rng));
            obs.push(CalibrationObservation {
                beam_id: b.id,
                point: p + jitter,
            });
        }
    }
    let rig = calibrate_rig(&obs)?;
    println!("beam  origin error (mm)  direction error (deg)  line rms (mm)");
    for ((fit, b), t) in rig.calibration.iter().zip(&rig.beams).zip(&truth.beams) {
        println!(
            "{:>4}  {:>17.3}  {:>21.4}  {:>13.3}",
            b.id,
            (b.origin - t.origin).norm() * 1e3,
            b.direction.angle(&t.direction).to_degrees(),
            fit.rms_m * 1e3
        );
    }
    let rig = rig.with_perpendicular_pair(1, 3)?;
    println!("pair 1-3 perpendicular distance: {:.4} m", rig.pairs[0].distance_m);
    Ok(())
}
