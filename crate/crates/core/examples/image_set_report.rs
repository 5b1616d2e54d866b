//! The full pipeline on a synthetic six-image set in model units: localize
//! each image, estimate its scale with every method and aggregate.

use laserscale::mesh::MeshIndex;
use laserscale::poseest::{localize, LocalizeConfig};
use laserscale::scaling::{aggregate_report, ImageScale, ScaleMethod};
use laserscale::simulate::{synthesize_bundle, BundleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BundleSpec {
        model_scale: 4.22,
        sigma_f: 0.5,
        sigma_l: 0.5,
        outlier_ratio: 0.1,
        seed: 2,
        ..BundleSpec::new("dive")
    };
    let bundle = synthesize_bundle(&spec)?;
    let index = MeshIndex::build(bundle.mesh.clone());
    let mut estimates = Vec::new();
    for img in &bundle.images {
        let est = localize(&img.correspondences, &bundle.camera, &LocalizeConfig::default())?;
        for m in ScaleMethod::ALL {
            if m.check_rig(&bundle.rig).is_err() {
                continue;
            }
            let s = m.estimate(&index, &est.intrinsics, &est.pose, &bundle.rig, &img.detections)?;
            estimates.push(ImageScale {
                rms_px: Some(est.rms_px),
                inliers: Some(est.inlier_ids.len()),
                ..ImageScale::new(&img.image_id, s)
            });
        }
    }
    let report = aggregate_report(&estimates)?;
    print!("{}", laserscale::cli::format_summary(&report));
    println!("true scale {:.6}", bundle.true_scale);
    Ok(())
}
