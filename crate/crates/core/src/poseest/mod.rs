//! Camera localization against known 3D points: minimal solvers, a robust
//! sampling loop and non-linear refinement of the reprojection error.

mod dlt;
mod p3p;
mod ransac;
mod refine;

pub use dlt::solve_dlt;
pub use p3p::{absolute_orientation, solve_p3p};
pub use ransac::{robust_estimate, MinimalSolver, RansacConfig, ThresholdMode};
pub use refine::{
    apply_increment, projection_jacobian, refine_pose, reprojection_cost, RefineConfig,
};

use crate::geometry::{CameraIntrinsics, CameraPose, GeometryError, Pixel, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoseError {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("design matrix is rank deficient (coplanar or too few distinct points)")]
    RankDeficient,
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientCorrespondences { needed: usize, got: usize },
    #[error("no consensus: best hypothesis has {inliers} inliers (need {needed})")]
    NoConsensus { inliers: usize, needed: usize },
    #[error("optimization diverged: {0}")]
    DivergedOptimization(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A model point and its image observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub id: u64,
    pub point: Vec3,
    pub pixel: Pixel,
}

impl Correspondence {
    pub fn new(id: u64, point: Vec3, pixel: Pixel) -> Self {
        Self { id, point, pixel }
    }
}

/// Result of localization.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub pose: CameraPose,
    /// Intrinsics used for the estimate (refined when requested).
    pub intrinsics: CameraIntrinsics,
    /// Sorted ids of the correspondences treated as inliers.
    pub inlier_ids: Vec<u64>,
    /// Root mean square of the per-axis reprojection residuals over inliers.
    pub rms_px: f64,
    /// Sampling iterations (robust loop) or optimizer iterations (refinement).
    pub iterations: usize,
    /// Inlier threshold in pixels, when a robust loop produced the estimate.
    pub threshold_px: Option<f64>,
    pub initial_cost: f64,
    pub final_cost: f64,
}

/// Per-axis RMS of reprojection residuals, `sqrt(Σ‖r‖² / 2n)`.
pub(crate) fn rms_from_cost(cost: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (cost / (2 * n) as f64).sqrt()
    }
}

/// Settings for the full localization pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalizeConfig {
    pub ransac: RansacConfig,
    pub refine: RefineConfig,
}

/// Robust estimate followed by refinement on its inliers.
pub fn localize(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    config: &LocalizeConfig,
) -> Result<PoseEstimate, PoseError> {
    let robust = robust_estimate(corrs, k, &config.ransac)?;
    let inliers: Vec<Correspondence> = corrs
        .iter()
        .filter(|c| robust.inlier_ids.binary_search(&c.id).is_ok())
        .copied()
        .collect();
    let mut est = refine_pose(&inliers, k, &robust.pose, &config.refine)?;
    est.threshold_px = robust.threshold_px;
    est.iterations += robust.iterations;
    Ok(est)
}

#[derive(Deserialize)]
struct CorrespondenceRow {
    #[serde(default)]
    image_id: Option<String>,
    id: u64,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "Y")]
    y: f64,
    #[serde(rename = "Z")]
    z: f64,
    u: f64,
    v: f64,
}

/// Reads `[image_id,]id,X,Y,Z,u,v` rows grouped by image. Without an
/// `image_id` column every row belongs to the image `""`.
pub fn read_correspondences(path: &Path) -> Result<BTreeMap<String, Vec<Correspondence>>, PoseError> {
    let parse_err = |message: String| PoseError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let mut out: BTreeMap<String, Vec<Correspondence>> = BTreeMap::new();
    for (i, row) in reader.deserialize::<CorrespondenceRow>().enumerate() {
        let row = row.map_err(|e| parse_err(format!("row {}: {e}", i + 1)))?;
        let c = Correspondence::new(row.id, Vec3::new(row.x, row.y, row.z), Pixel::new(row.u, row.v));
        if !(c.point.iter().all(|x| x.is_finite()) && c.pixel.is_finite()) {
            return Err(parse_err(format!("row {}: non-finite value", i + 1)));
        }
        out.entry(row.image_id.unwrap_or_default()).or_default().push(c);
    }
    for (image, list) in &out {
        let mut ids: Vec<u64> = list.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(parse_err(format!("image {image:?}: duplicate correspondence id {}", w[0])));
        }
    }
    Ok(out)
}

/// Writes the rows read by [`read_correspondences`], one image at a time.
pub fn write_correspondences<'a, W: Write>(
    images: impl IntoIterator<Item = (&'a str, &'a [Correspondence])>,
    comments: &[String],
    mut out: W,
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "image_id,id,X,Y,Z,u,v")?;
    for (image, list) in images {
        for c in list {
            writeln!(
                out,
                "{image},{},{},{},{},{},{}",
                c.id, c.point.x, c.point.y, c.point.z, c.pixel.u, c.pixel.v
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::geometry::project;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub fn camera() -> CameraIntrinsics {
        CameraIntrinsics::pinhole(1400.0, 1400.0, 960.0, 540.0)
            .with_distortion(-0.05, 0.01, 0.0)
            .with_image_size(1920, 1080)
    }

    pub fn random_pose(rng: &mut ChaCha8Rng) -> CameraPose {
        // camera looking roughly at the origin from ~3 m
        let r = Rotation3::from_euler_angles(
            std::f64::consts::PI + rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-3.0..3.0),
        );
        let center = -(r * Vec3::z()) * rng.random_range(2.5..4.0)
            + Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 0.0);
        CameraPose::from_rotation(r, center)
    }

    /// Visible points in front of the camera with noisy pixels and a fraction
    /// of uniformly random outliers. Returns the correspondences and the ids
    /// of the true inliers.
    pub fn scene(
        seed: u64,
        n: usize,
        sigma: f64,
        outlier_ratio: f64,
    ) -> (CameraIntrinsics, CameraPose, Vec<Correspondence>, Vec<u64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = camera();
        let pose = random_pose(&mut rng);
        let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        let n_out = (outlier_ratio * n as f64).floor() as usize;
        let mut corrs = Vec::with_capacity(n);
        let mut inliers = Vec::new();
        while corrs.len() < n {
            let u = rng.random_range(0.0..1920.0);
            let v = rng.random_range(0.0..1080.0);
            let depth = rng.random_range(2.0..4.5);
            let n_ = k.pixel_to_normalized(&Pixel::new(u, v)).unwrap();
            let xc = Vec3::new(n_.x, n_.y, 1.0) * depth;
            let x = pose.camera_to_world(&xc);
            let id = corrs.len() as u64;
            let mut px = project(&k, &pose, &x).unwrap();
            if id < n_out as u64 {
                px = Pixel::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0));
            } else {
                if sigma > 0.0 {
                    px.u += noise.sample(&mut rng);
                    px.v += noise.sample(&mut rng);
                }
                inliers.push(id);
            }
            corrs.push(Correspondence::new(id, x, px));
        }
        (k, pose, corrs, inliers)
    }
}
