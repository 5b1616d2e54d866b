//! Ground-truth observations: features sampled on the visible surface, laser
//! spots traced from the rig, and their noisy counterparts.

use super::{streams, trial_rng, SimError};
use crate::geometry::{pixel_to_ray, project, CameraIntrinsics, CameraPose, Pixel, Ray, Vec3};
use crate::laser::LaserRig;
use crate::mesh::MeshIndex;
use crate::poseest::Correspondence;
use crate::scaling::LaserDetection;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Failed draws allowed per requested feature before giving up.
const ATTEMPTS_PER_FEATURE: usize = 20;
/// A laser hit counts as visible when the camera ray reaches it within this
/// fraction of its distance.
const VISIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Feature noise per image axis, pixels.
    pub sigma_f: f64,
    /// Laser-spot noise per image axis, pixels.
    pub sigma_l: f64,
    /// Fraction of features replaced by uniformly random pixels.
    pub outlier_ratio: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            sigma_f: 0.0,
            sigma_l: 0.0,
            outlier_ratio: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok_sigma = |s: f64| s.is_finite() && s >= 0.0;
        if !ok_sigma(self.sigma_f) || !ok_sigma(self.sigma_l) {
            return Err(SimError::InvalidSpec("noise sigmas must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_ratio) {
            return Err(SimError::InvalidSpec("outlier ratio must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Number of outliers injected among `n` features.
    pub fn outlier_count(&self, n: usize) -> usize {
        ((self.outlier_ratio * n as f64) + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaserStatus {
    Visible,
    /// The beam does not reach the surface.
    Missed,
    /// The spot is hidden from the camera by other relief.
    Occluded,
    /// The spot projects outside the image or behind the camera.
    OutOfImage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserTruth {
    pub beam_id: u32,
    pub status: LaserStatus,
    pub hit: Option<Vec3>,
    pub pixel: Option<Pixel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub pose: CameraPose,
    /// Noiseless correspondences, same ids as the observed ones.
    pub features: Vec<Correspondence>,
    pub lasers: Vec<LaserTruth>,
    /// Sorted ids of the features replaced by outliers.
    pub outlier_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub correspondences: Vec<Correspondence>,
    pub detections: Vec<LaserDetection>,
    pub truth: GroundTruth,
}

fn image_size(k: &CameraIntrinsics) -> Result<(f64, f64), SimError> {
    if k.has_image_size() {
        Ok((k.width as f64, k.height as f64))
    } else {
        Err(SimError::InvalidSpec("camera needs an image size for synthesis".into()))
    }
}

/// `n` visible surface points spread uniformly over the image. Each point is
/// the first mesh hit of the ray through a uniformly drawn pixel; its
/// observation is the exact projection of that hit.
pub fn sample_features<R: Rng>(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Correspondence>, SimError> {
    let (w, h) = image_size(k)?;
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        if attempts >= ATTEMPTS_PER_FEATURE * n.max(1) {
            return Err(SimError::InsufficientVisibleSurface { got: out.len(), needed: n });
        }
        attempts += 1;
        let px = Pixel::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
        let Ok(ray) = pixel_to_ray(k, pose, &px) else { continue };
        let Some(hit) = index.ray_cast(&ray) else { continue };
        let Ok(pixel) = project(k, pose, &hit.point) else { continue };
        if k.contains(&pixel) {
            out.push(Correspondence::new(out.len() as u64, hit.point, pixel));
        }
    }
    Ok(out)
}

/// Adds `sigma_f · z` per axis from standard normals `z`, then replaces
/// exactly `⌊r·n⌋` features, chosen at random, by uniform pixels. Returns the
/// noisy set and the sorted outlier ids.
pub fn perturb_features<R: Rng>(
    clean: &[Correspondence],
    k: &CameraIntrinsics,
    noise: &NoiseSpec,
    noise_rng: &mut R,
    outlier_rng: &mut R,
) -> Result<(Vec<Correspondence>, Vec<u64>), SimError> {
    noise.validate()?;
    let (w, h) = image_size(k)?;
    let mut out: Vec<Correspondence> = clean
        .iter()
        .map(|c| {
            let du: f64 = noise_rng.sample(StandardNormal);
            let dv: f64 = noise_rng.sample(StandardNormal);
            let pixel = Pixel::new(c.pixel.u + noise.sigma_f * du, c.pixel.v + noise.sigma_f * dv);
            Correspondence::new(c.id, c.point, pixel)
        })
        .collect();
    let count = noise.outlier_count(out.len());
    let mut ids = Vec::with_capacity(count);
    for i in index::sample(outlier_rng, out.len(), count) {
        out[i].pixel = Pixel::new(outlier_rng.random_range(0.0..w), outlier_rng.random_range(0.0..h));
        ids.push(out[i].id);
    }
    ids.sort_unstable();
    Ok((out, ids))
}

/// Casts every beam of the rig (origins and directions in the camera frame)
/// against the mesh and projects the visible spots.
pub fn trace_lasers(index: &MeshIndex, k: &CameraIntrinsics, pose: &CameraPose, rig: &LaserRig) -> Vec<LaserTruth> {
    rig.beams
        .iter()
        .map(|b| {
            let truth = |status, hit, pixel| LaserTruth {
                beam_id: b.id,
                status,
                hit,
                pixel,
            };
            let Ok(beam) = Ray::new(pose.camera_to_world(&b.origin), pose.camera_direction_to_world(&b.direction))
            else {
                return truth(LaserStatus::Missed, None, None);
            };
            let Some(hit) = index.ray_cast(&beam) else {
                return truth(LaserStatus::Missed, None, None);
            };
            let x = hit.point;
            let to_spot = x - pose.center();
            let dist = to_spot.norm();
            let visible = Ray::new(pose.center(), to_spot)
                .ok()
                .and_then(|r| index.ray_cast(&r))
                .is_some_and(|h| h.distance >= dist * (1.0 - VISIBILITY_TOLERANCE));
            if !visible {
                return truth(LaserStatus::Occluded, Some(x), None);
            }
            match project(k, pose, &x) {
                Ok(px) if !k.has_image_size() || k.contains(&px) => truth(LaserStatus::Visible, Some(x), Some(px)),
                _ => truth(LaserStatus::OutOfImage, Some(x), None),
            }
        })
        .collect()
}

/// Visible spots with `sigma_l · z` added per axis. Standard normals are
/// drawn for every beam, visible or not, so the draws for a given beam do not
/// depend on the visibility of the others.
pub fn noisy_detections<R: Rng>(lasers: &[LaserTruth], sigma_l: f64, rng: &mut R) -> Vec<LaserDetection> {
    let normals: Vec<(f64, f64)> = lasers
        .iter()
        .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    detections_from_normals(lasers, sigma_l, &normals)
}

pub(crate) fn detections_from_normals(
    lasers: &[LaserTruth],
    sigma_l: f64,
    normals: &[(f64, f64)],
) -> Vec<LaserDetection> {
    lasers
        .iter()
        .zip(normals)
        .filter_map(|(l, &(zu, zv))| {
            let px = l.pixel.filter(|_| l.status == LaserStatus::Visible)?;
            Some(LaserDetection::new(l.beam_id, Pixel::new(px.u + sigma_l * zu, px.v + sigma_l * zv)))
        })
        .collect()
}

/// Features, detections and ground truth for one view. All randomness comes
/// from `noise.seed`.
pub fn synthesize_observations(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    rig: &LaserRig,
    n_features: usize,
    noise: &NoiseSpec,
) -> Result<Observations, SimError> {
    noise.validate()?;
    let clean = sample_features(index, k, pose, n_features, &mut trial_rng(noise.seed, &[], streams::FEATURES))?;
    let (correspondences, outlier_ids) = perturb_features(
        &clean,
        k,
        noise,
        &mut trial_rng(noise.seed, &[], streams::FEATURE_NOISE),
        &mut trial_rng(noise.seed, &[], streams::OUTLIERS),
    )?;
    let lasers = trace_lasers(index, k, pose, rig);
    let detections = noisy_detections(&lasers, noise.sigma_l, &mut trial_rng(noise.seed, &[], streams::LASER_NOISE));
    Ok(Observations {
        correspondences,
        detections,
        truth: GroundTruth {
            pose: *pose,
            features: clean,
            lasers,
            outlier_ids,
        },
    })
}
