//! FCM on an oblique rough-terrain view: every beam gives the exact scale.

use laserscale::laser::{builtin_config, RigConfig};
use laserscale::mesh::MeshIndex;
use laserscale::scaling::fcm_scale_all;
use laserscale::simulate::{
    default_camera, generate_view, surface_point, synthesize_observations, NoiseSpec, TerrainKind, TerrainSpec, ViewSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let index = MeshIndex::build(TerrainSpec::new(TerrainKind::Rough, 7).generate());
    let k = default_camera();
    let anchor = surface_point(&index, 0.0, 0.0).ok_or("anchor off the terrain")?;
    for rig_kind in [RigConfig::A, RigConfig::B, RigConfig::C] {
        let rig = builtin_config(rig_kind);
        let pose = generate_view(&index, &ViewSpec::new(anchor, 35.0, 25.0, 3.0))?;
        let obs = synthesize_observations(&index, &k, &pose, &rig, 100, &NoiseSpec::noiseless(0))?;
        let est = fcm_scale_all(&index, &k, &pose, &rig, &obs.detections)?;
        print!("rig {rig_kind:?}: s = {:.12}  per beam:", est.value);
        for e in &est.entries {
            print!("  {}={:.12}", e.key, e.s);
        }
        println!();
        for (beam, why) in &est.failures {
            println!("  beam {beam} skipped: {why}");
        }
    }
    Ok(())
}
