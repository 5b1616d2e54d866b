//! Localizes a camera from noisy correspondences with 20% outliers.

use laserscale::laser::{builtin_config, RigConfig};
use laserscale::mesh::MeshIndex;
use laserscale::poseest::{localize, LocalizeConfig};
use laserscale::simulate::{
    default_camera, generate_view, surface_point, synthesize_observations, NoiseSpec, TerrainKind, TerrainSpec, ViewSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let index = MeshIndex::build(TerrainSpec::new(TerrainKind::Rough, 7).generate());
    let k = default_camera();
    let anchor = surface_point(&index, 0.5, -0.5).ok_or("anchor off the terrain")?;
    let truth = generate_view(&index, &ViewSpec::new(anchor, 20.0, -10.0, 3.0))?;
    let noise = NoiseSpec {
        sigma_f: 0.5,
        sigma_l: 0.0,
        outlier_ratio: 0.2,
        seed: 5,
    };
    let obs = synthesize_observations(&index, &k, &truth, &builtin_config(RigConfig::A), 1500, &noise)?;

    let mut config = LocalizeConfig::default();
    config.ransac.seed = 5;
    let est = localize(&obs.correspondences, &k, &config)?;

    let outliers = &obs.truth.outlier_ids;
    let true_inliers = est.inlier_ids.iter().filter(|id| outliers.binary_search(id).is_err()).count();
    let rot_err = (est.pose.rotation().inverse() * truth.rotation()).angle().to_degrees();
    println!("correspondences: {} ({} outliers)", obs.correspondences.len(), outliers.len());
    println!("inliers found:   {} ({} true inliers)", est.inlier_ids.len(), true_inliers);
    println!("threshold:       {:.2} px", est.threshold_px.unwrap_or(f64::NAN));
    println!("rms:             {:.3} px", est.rms_px);
    println!("rotation error:  {rot_err:.4} deg");
    println!("center error:    {:.2} mm", (est.pose.center() - truth.center()).norm() * 1e3);
    println!("cost:            {:.1} -> {:.1}", est.initial_cost, est.final_cost);
    Ok(())
}
