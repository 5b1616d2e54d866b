//! Davis and Direct-3D against FCM at 40° on rough terrain.

use laserscale::laser::{builtin_config, RigConfig};
use laserscale::mesh::MeshIndex;
use laserscale::scaling::ScaleMethod;
use laserscale::simulate::{
    default_camera, generate_view, surface_point, synthesize_observations, NoiseSpec, TerrainKind, TerrainSpec, ViewSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let index = MeshIndex::build(TerrainSpec::new(TerrainKind::Rough, 7).generate());
    let k = default_camera();
    let anchor = surface_point(&index, 0.0, 0.0).ok_or("anchor off the terrain")?;
    for (rig_kind, methods) in [
        (RigConfig::A, vec![ScaleMethod::Fcm, ScaleMethod::Davis, ScaleMethod::Pcm]),
        (RigConfig::C, vec![ScaleMethod::Fcm, ScaleMethod::Direct3d, ScaleMethod::Pcm]),
    ] {
        let rig = builtin_config(rig_kind);
        println!("rig {rig_kind:?}");
        for (pitch, roll) in [(40.0, 0.0), (0.0, 40.0), (-40.0, 40.0), (40.0, -40.0)] {
            let pose = generate_view(&index, &ViewSpec::new(anchor, pitch, roll, 3.0))?;
            let obs = synthesize_observations(&index, &k, &pose, &rig, 50, &NoiseSpec::noiseless(0))?;
            print!("  pitch {pitch:>5} roll {roll:>5}:");
            for m in &methods {
                match m.estimate(&index, &k, &pose, &rig, &obs.detections) {
                    Ok(e) => print!("  {m} |s-1|={:.2e} spread={:.2e}", (e.value - 1.0).abs(), e.std),
                    Err(e) => print!("  {m} failed ({e})"),
                }
            }
            println!();
        }
    }
    Ok(())
}
