//! Parallel-pair method and the Direct-3D baseline. Both start from the
//! model points hit by two laser spots.
//!
//! PCM approximates the common beam direction by the direction from the
//! camera center to the midpoint of the two hits and measures the hit
//! separation perpendicular to it. Direct-3D uses the raw Euclidean distance.

use super::{detection, laser_hit, pair_key, LaserDetection, ScaleEntry, ScaleError, ScaleEstimate, ScaleMethod};
use crate::geometry::{CameraIntrinsics, CameraPose, Vec3};
use crate::laser::{LaserPair, LaserRig};
use crate::mesh::MeshIndex;
use serde::{Deserialize, Serialize};

/// Relative hit separation below which two hits count as coincident.
const COINCIDENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcmBreakdown {
    pub x_l1: Vec3,
    pub x_l2: Vec3,
    /// Midpoint of the hits.
    pub x_m: Vec3,
    pub v12: Vec3,
    /// From the camera center to `x_m`, world frame.
    pub v_cm: Vec3,
    /// Angle between `v12` and `v_cm`, radians.
    pub alpha: f64,
    /// `sin α · |v12|`, model units.
    pub d_hat: f64,
}

impl PcmBreakdown {
    pub fn from_hits(x_l1: Vec3, x_l2: Vec3, camera_center: Vec3) -> Self {
        let x_m = (x_l1 + x_l2) * 0.5;
        let v12 = x_l2 - x_l1;
        let v_cm = x_m - camera_center;
        let alpha = v12.cross(&v_cm).norm().atan2(v12.dot(&v_cm));
        let d_hat = alpha.sin() * v12.norm();
        Self {
            x_l1,
            x_l2,
            x_m,
            v12,
            v_cm,
            alpha,
            d_hat,
        }
    }
}

fn pair_hits(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    pair: &LaserPair,
    dets: &[LaserDetection],
) -> Result<(Vec3, Vec3), ScaleError> {
    let x1 = laser_hit(index, k, pose, detection(dets, pair.a)?)?;
    let x2 = laser_hit(index, k, pose, detection(dets, pair.b)?)?;
    let sep = (x2 - x1).norm();
    if !(sep > COINCIDENT_TOLERANCE * (1.0 + x1.norm().max(x2.norm()))) {
        return Err(ScaleError::CoincidentHits {
            a: pair.a,
            b: pair.b,
        });
    }
    Ok((x1, x2))
}

/// `s = d_L / d̂` for one pair.
pub fn pcm_scale(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    pair: &LaserPair,
    dets: &[LaserDetection],
) -> Result<(f64, PcmBreakdown), ScaleError> {
    let (x1, x2) = pair_hits(index, k, pose, pair, dets)?;
    let b = PcmBreakdown::from_hits(x1, x2, pose.center());
    if !(b.d_hat > 0.0) {
        return Err(ScaleError::CoincidentHits {
            a: pair.a,
            b: pair.b,
        });
    }
    Ok((pair.distance_m / b.d_hat, b))
}

/// `s = d_L / ‖X_L1 − X_L2‖` for one pair.
pub fn direct3d_scale(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    pair: &LaserPair,
    dets: &[LaserDetection],
) -> Result<f64, ScaleError> {
    let (x1, x2) = pair_hits(index, k, pose, pair, dets)?;
    Ok(pair.distance_m / (x2 - x1).norm())
}

/// PCM on each declared pair of the rig, averaged.
pub fn pcm_scale_all(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    rig: &LaserRig,
    dets: &[LaserDetection],
) -> Result<ScaleEstimate, ScaleError> {
    over_pairs(ScaleMethod::Pcm, rig, |p| {
        pcm_scale(index, k, pose, p, dets).map(|(s, b)| (s, b.d_hat))
    })
}

/// Direct-3D on each declared pair of the rig, averaged.
pub fn direct3d_scale_all(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    rig: &LaserRig,
    dets: &[LaserDetection],
) -> Result<ScaleEstimate, ScaleError> {
    over_pairs(ScaleMethod::Direct3d, rig, |p| {
        direct3d_scale(index, k, pose, p, dets).map(|s| (s, p.distance_m / s))
    })
}

fn over_pairs(
    method: ScaleMethod,
    rig: &LaserRig,
    mut eval: impl FnMut(&LaserPair) -> Result<(f64, f64), ScaleError>,
) -> Result<ScaleEstimate, ScaleError> {
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for p in &rig.pairs {
        match eval(p) {
            Ok((s, m_hat)) => entries.push(ScaleEntry {
                key: pair_key(p.a, p.b),
                s,
                m: p.distance_m,
                m_hat,
            }),
            Err(e) => failures.push((pair_key(p.a, p.b), e.to_string())),
        }
    }
    ScaleEstimate::from_entries(method, entries, failures)
}
