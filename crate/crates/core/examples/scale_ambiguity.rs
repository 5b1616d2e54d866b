//! A model in arbitrary units: scaling mesh and poses by f leaves every
//! image unchanged and divides the recovered scale by f.

use laserscale::laser::{builtin_config, RigConfig};
use laserscale::mesh::{scale_mesh, MeshIndex};
use laserscale::scaling::ScaleMethod;
use laserscale::simulate::{
    default_camera, generate_view, surface_point, synthesize_observations, NoiseSpec, TerrainKind, TerrainSpec, ViewSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let metric = TerrainSpec::new(TerrainKind::Smooth, 7).generate();
    let index = MeshIndex::build(metric.clone());
    let k = default_camera();
    let rig = builtin_config(RigConfig::A);
    let anchor = surface_point(&index, 1.0, 1.0).ok_or("anchor off the terrain")?;
    let pose = generate_view(&index, &ViewSpec::new(anchor, 15.0, 10.0, 2.5))?;
    let obs = synthesize_observations(&index, &k, &pose, &rig, 50, &NoiseSpec::noiseless(0))?;

    println!("factor   fcm          pcm          davis        direct3d     s * f");
    for f in [0.5, 1.0, 2.0, 4.22] {
        let model = MeshIndex::build(scale_mesh(&metric, f)?);
        let model_pose = pose.scaled(f);
        print!("{f:>6}");
        let mut fcm = f64::NAN;
        for m in ScaleMethod::ALL {
            let s = m.estimate(&model, &k, &model_pose, &rig, &obs.detections)?.value;
            if m == ScaleMethod::Fcm {
                fcm = s;
            }
            print!("   {s:.8}");
        }
        println!("   {:.12}", fcm * f);
    }
    Ok(())
}
