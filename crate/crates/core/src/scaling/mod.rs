//! Model scale from laser spots: `s = m / m̂`, the ratio of a known metric
//! quantity to its estimate measured on the model.
//!
//! * FCM uses one fully calibrated beam (origin and direction).
//! * PCM uses a pair of parallel beams with a known perpendicular distance.
//! * Davis and Direct-3D are baselines.

mod davis;
mod fcm;
mod pcm;
mod report;

pub use davis::davis_scale;
pub use fcm::{fcm_scale_all, fcm_scale_single, FcmMeasurement};
pub use pcm::{direct3d_scale, direct3d_scale_all, pcm_scale, pcm_scale_all, PcmBreakdown};
pub use report::{
    aggregate_report, read_detections, read_report_csv, write_report_csv, ImageScale, ImageSummary, LaserDeviation,
    MethodSummary, ScaleReport,
};

use crate::geometry::{pixel_to_ray, CameraIntrinsics, CameraPose, GeometryError, Pixel, Vec3};
use crate::laser::{LaserError, LaserRig};
use crate::mesh::MeshIndex;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error("beam {beam_id}: laser ray misses the model")]
    LaserMiss { beam_id: u32 },
    #[error("beam {beam_id}: beam is parallel to the laser origin plane")]
    BeamParallelToPlane { beam_id: u32 },
    #[error("beam {beam_id}: origin coincides with the optical center")]
    DegenerateOrigin { beam_id: u32 },
    #[error("beams {a} and {b}: hit points coincide")]
    CoincidentHits { a: u32, b: u32 },
    #[error("beam {beam_id}: not aligned with the optical axis")]
    NotAxisAligned { beam_id: u32 },
    #[error("flat-scene fit is degenerate: {0}")]
    FlatFitDegenerate(String),
    #[error("no detection for beam {beam_id}")]
    MissingDetection { beam_id: u32 },
    #[error("all beams failed")]
    AllBeamsFailed,
    #[error("no estimates to aggregate")]
    EmptyInput,
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Laser(#[from] LaserError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A detected laser spot in one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserDetection {
    pub beam_id: u32,
    pub pixel: Pixel,
}

impl LaserDetection {
    pub fn new(beam_id: u32, pixel: Pixel) -> Self {
        Self { beam_id, pixel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMethod {
    Fcm,
    Pcm,
    Davis,
    Direct3d,
}

impl ScaleMethod {
    pub const ALL: [ScaleMethod; 4] = [
        ScaleMethod::Fcm,
        ScaleMethod::Pcm,
        ScaleMethod::Davis,
        ScaleMethod::Direct3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScaleMethod::Fcm => "fcm",
            ScaleMethod::Pcm => "pcm",
            ScaleMethod::Davis => "davis",
            ScaleMethod::Direct3d => "direct3d",
        }
    }

    /// Fails when the rig lacks what the method needs: beam pairs for the
    /// pair methods, and beams along the optical axis for Davis.
    pub fn check_rig(self, rig: &LaserRig) -> Result<(), ScaleError> {
        if self != ScaleMethod::Fcm && rig.pairs.is_empty() {
            return Err(ScaleError::Laser(LaserError::InvalidRig(format!(
                "{self} needs beam pairs and the rig declares none"
            ))));
        }
        if self == ScaleMethod::Davis {
            if let Some(b) = rig.beams.iter().find(|b| !b.is_axis_aligned(davis::AXIS_TOLERANCE_RAD)) {
                return Err(ScaleError::NotAxisAligned { beam_id: b.id });
            }
        }
        Ok(())
    }

    /// Scale of one image over every beam (FCM) or every pair.
    pub fn estimate(
        self,
        index: &MeshIndex,
        k: &CameraIntrinsics,
        pose: &CameraPose,
        rig: &LaserRig,
        dets: &[LaserDetection],
    ) -> Result<ScaleEstimate, ScaleError> {
        match self {
            ScaleMethod::Fcm => fcm_scale_all(index, k, pose, rig, dets),
            ScaleMethod::Pcm => pcm_scale_all(index, k, pose, rig, dets),
            ScaleMethod::Davis => davis_scale(index, k, pose, rig, dets),
            ScaleMethod::Direct3d => direct3d_scale_all(index, k, pose, rig, dets),
        }
    }
}

impl fmt::Display for ScaleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScaleMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fcm" => Ok(ScaleMethod::Fcm),
            "pcm" => Ok(ScaleMethod::Pcm),
            "davis" => Ok(ScaleMethod::Davis),
            "direct3d" | "direct-3d" => Ok(ScaleMethod::Direct3d),
            other => Err(format!(
                "unknown method {other:?} (expected fcm, pcm, davis or direct3d)"
            )),
        }
    }
}

/// One scale value: a beam (FCM) or a beam pair (the other methods).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry {
    /// Beam id, or `a-b` for a pair.
    pub key: String,
    pub s: f64,
    /// Known metric quantity.
    pub m: f64,
    /// Its estimate on the model, in model units.
    pub m_hat: f64,
}

/// Fused scale of one image for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub method: ScaleMethod,
    pub entries: Vec<ScaleEntry>,
    /// Mean of the entries.
    pub value: f64,
    /// Sample standard deviation of the entries (0 for a single entry).
    pub std: f64,
    /// Beams or pairs that could not be evaluated, with the reason.
    pub failures: Vec<(String, String)>,
}

impl ScaleEstimate {
    pub fn from_entries(
        method: ScaleMethod,
        entries: Vec<ScaleEntry>,
        failures: Vec<(String, String)>,
    ) -> Result<Self, ScaleError> {
        if entries.is_empty() {
            return Err(ScaleError::AllBeamsFailed);
        }
        let values: Vec<f64> = entries.iter().map(|e| e.s).collect();
        let (value, std) = mean_and_std(&values);
        Ok(Self {
            method,
            entries,
            value,
            std,
            failures,
        })
    }

    pub fn entry(&self, key: &str) -> Option<&ScaleEntry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 when `n < 2`).
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub(crate) fn pair_key(a: u32, b: u32) -> String {
    format!("{a}-{b}")
}

pub(crate) fn detection(dets: &[LaserDetection], beam_id: u32) -> Result<&LaserDetection, ScaleError> {
    dets.iter()
        .find(|d| d.beam_id == beam_id)
        .ok_or(ScaleError::MissingDetection { beam_id })
}

/// World-frame point where the viewing ray of a laser spot meets the model.
pub fn laser_hit(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    det: &LaserDetection,
) -> Result<Vec3, ScaleError> {
    let ray = pixel_to_ray(k, pose, &det.pixel)?;
    index
        .ray_cast(&ray)
        .map(|h| h.point)
        .ok_or(ScaleError::LaserMiss {
            beam_id: det.beam_id,
        })
}
