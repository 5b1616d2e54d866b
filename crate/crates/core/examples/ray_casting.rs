//! Casts rays into a generated terrain with the BVH and by brute force.

use laserscale::geometry::{Ray, Vec3};
use laserscale::mesh::MeshIndex;
use laserscale::simulate::{TerrainKind, TerrainSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let mesh = TerrainSpec::new(TerrainKind::Rough, 7).generate();
    println!("terrain: {} triangles", mesh.triangle_count());
    let t0 = Instant::now();
    let index = MeshIndex::build(mesh);
    println!("bvh build: {:.1} ms", t0.elapsed().as_secs_f64() * 1e3);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rays: Vec<Ray> = (0..2000)
        .map(|_| {
            let o = Vec3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), 4.0);
            let d = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), -1.0);
            Ray::new(o, d).unwrap()
        })
        .collect();

    let t0 = Instant::now();
    let fast: Vec<_> = rays.iter().map(|r| index.ray_cast(r)).collect();
    let t_fast = t0.elapsed();
    let t0 = Instant::now();
    let slow: Vec<_> = rays.iter().take(200).map(|r| index.ray_cast_brute_force(r)).collect();
    let t_slow = t0.elapsed() * 10;

    let agree = fast
        .iter()
        .zip(&slow)
        .filter(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => a.triangle_index == b.triangle_index && (a.distance - b.distance).abs() < 1e-9,
            (None, None) => true,
            _ => false,
        })
        .count();
    println!("hits: {} of {}", fast.iter().filter(|h| h.is_some()).count(), rays.len());
    println!("bvh: {:.2} ms, brute force (extrapolated): {:.0} ms", t_fast.as_secs_f64() * 1e3, t_slow.as_secs_f64() * 1e3);
    println!("agreement on the first {}: {agree}", slow.len());
}
