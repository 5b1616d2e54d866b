//! PCM error binned by the depth difference of its spots, at two distances.

use laserscale::laser::{builtin_config, RigConfig};
use laserscale::mesh::MeshIndex;
use laserscale::simulate::{bin_by_depth_difference, depth_discrepancy_study, TerrainKind, TerrainSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let terrain = TerrainSpec::new(TerrainKind::Rough, 7);
    let index = MeshIndex::build(terrain.generate());
    let rig = builtin_config(RigConfig::B);
    let half = terrain.extent_m / 2.0 - 1.0;
    let study = depth_discrepancy_study(&index, &rig, &rig.pairs[0], 1000, &[2.0, 4.0], half, 3)?;
    let edges = [0.0, 0.02, 0.05, 0.1, 0.2, 0.5];
    for d in [2.0, 4.0] {
        println!("distance {d} m");
        for b in bin_by_depth_difference(study.at_distance(d), &edges) {
            println!("  |Δz| in [{:.2}, {:.2}): n = {:>4}, mean |s-1| = {:.2e}", b.lo, b.hi, b.n, b.mean_abs_error);
        }
    }
    for (why, n) in &study.skipped {
        println!("skipped {why}: {n}");
    }
    Ok(())
}
