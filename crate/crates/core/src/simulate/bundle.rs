//! Synthetic image sets in the file formats read by the command line:
//! a model mesh, intrinsics, a rig, correspondences and laser detections.
//!
//! The model may be expressed in arbitrary units (`model_scale` model units
//! per meter), as a monocular reconstruction would be. The true scale of
//! every image is then `1 / model_scale`.

use super::synth::{noisy_detections, perturb_features, sample_features, trace_lasers, LaserStatus, LaserTruth};
use super::{default_camera, generate_view, streams, surface_point, trial_rng, NoiseSpec, SimError, TerrainKind, TerrainSpec, ViewSpec};
use crate::geometry::{CameraIntrinsics, CameraPose};
use crate::laser::{builtin_config, LaserRig, RigConfig};
use crate::mesh::{scale_mesh, MeshIndex, TriangleMesh};
use crate::poseest::Correspondence;
use crate::scaling::LaserDetection;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Attempts per image to find a valid view with at least one visible spot.
const MAX_VIEW_ATTEMPTS: usize = 200;

fn default_smooth() -> TerrainKind {
    TerrainKind::Smooth
}
fn default_terrain_seed() -> u64 {
    7
}
fn default_rig() -> RigConfig {
    RigConfig::B
}
fn default_images() -> usize {
    6
}
fn default_spread() -> f64 {
    1.0
}
fn default_distance() -> f64 {
    3.0
}
fn default_angle() -> f64 {
    20.0
}
fn default_features() -> usize {
    1500
}
fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    pub name: String,
    #[serde(default = "default_smooth")]
    pub terrain: TerrainKind,
    #[serde(default = "default_terrain_seed")]
    pub terrain_seed: u64,
    #[serde(default = "default_rig")]
    pub rig: RigConfig,
    #[serde(default = "default_images")]
    pub images: usize,
    #[serde(default)]
    pub anchor_xy: [f64; 2],
    /// Anchors are drawn uniformly within this horizontal offset, meters.
    #[serde(default = "default_spread")]
    pub anchor_spread_m: f64,
    #[serde(default = "default_distance")]
    pub distance_m: f64,
    /// Pitch and roll are drawn uniformly within `±max_angle_deg`.
    #[serde(default = "default_angle")]
    pub max_angle_deg: f64,
    #[serde(default = "default_features")]
    pub n_features: usize,
    #[serde(default)]
    pub sigma_f: f64,
    #[serde(default)]
    pub sigma_l: f64,
    #[serde(default)]
    pub outlier_ratio: f64,
    /// Model units per meter.
    #[serde(default = "default_scale")]
    pub model_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

impl BundleSpec {
    pub fn new(name: impl Into<String>) -> Self {
        serde_json::from_value(serde_json::json!({ "name": name.into() })).expect("defaults deserialize")
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            sigma_f: self.sigma_f,
            sigma_l: self.sigma_l,
            outlier_ratio: self.outlier_ratio,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSpec(m.into()));
        if self.images < 1 {
            return bad("images must be at least 1");
        }
        if self.n_features < 6 {
            return bad("n_features must be at least 6");
        }
        if !(self.model_scale > 0.0 && self.model_scale.is_finite()) {
            return bad("model_scale must be positive");
        }
        if !(self.anchor_spread_m >= 0.0 && self.anchor_spread_m.is_finite()) {
            return bad("anchor_spread_m must be non-negative");
        }
        ViewSpec::new(Default::default(), self.max_angle_deg, 0.0, self.distance_m).validate()?;
        self.noise().validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleImage {
    pub image_id: String,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    /// True pose in model units.
    pub pose: CameraPose,
    /// Observed correspondences, model units.
    pub correspondences: Vec<Correspondence>,
    pub detections: Vec<LaserDetection>,
    pub lasers: Vec<LaserTruth>,
    pub outlier_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBundle {
    /// Model mesh, model units.
    pub mesh: TriangleMesh,
    pub camera: CameraIntrinsics,
    /// Metric rig.
    pub rig: LaserRig,
    pub images: Vec<BundleImage>,
    /// Scale that maps the model to meters.
    pub true_scale: f64,
}

pub fn synthesize_bundle(spec: &BundleSpec) -> Result<SyntheticBundle, SimError> {
    spec.validate()?;
    let terrain = TerrainSpec::new(spec.terrain, spec.terrain_seed);
    let metric = terrain.generate();
    let index = MeshIndex::build(metric.clone());
    let k = default_camera();
    let rig = builtin_config(spec.rig);
    let noise = spec.noise();
    let f = spec.model_scale;
    let a = spec.max_angle_deg;
    let mut images = Vec::with_capacity(spec.images);
    for i in 0..spec.images {
        let part = [i as u64];
        let mut rng = trial_rng(spec.seed, &part, streams::ANCHORS);
        let mut found = None;
        for _ in 0..MAX_VIEW_ATTEMPTS {
            let s = spec.anchor_spread_m;
            let x = spec.anchor_xy[0] + if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
            let y = spec.anchor_xy[1] + if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
            let (pitch, roll) = if a > 0.0 {
                (rng.random_range(-a..=a), rng.random_range(-a..=a))
            } else {
                (0.0, 0.0)
            };
            let Some(anchor) = surface_point(&index, x, y) else { continue };
            let Ok(pose) = generate_view(&index, &ViewSpec::new(anchor, pitch, roll, spec.distance_m)) else {
                continue;
            };
            let lasers = trace_lasers(&index, &k, &pose, &rig);
            if lasers.iter().any(|l| l.status == LaserStatus::Visible) {
                found = Some((pitch, roll, pose, lasers));
                break;
            }
        }
        let (pitch_deg, roll_deg, pose, lasers) = found.ok_or_else(|| {
            SimError::InvalidSpec(format!("no valid view with a visible laser spot for image {}", i + 1))
        })?;
        let clean = sample_features(&index, &k, &pose, spec.n_features, &mut trial_rng(spec.seed, &part, streams::FEATURES))?;
        let (features, outlier_ids) = perturb_features(
            &clean,
            &k,
            &noise,
            &mut trial_rng(spec.seed, &part, streams::FEATURE_NOISE),
            &mut trial_rng(spec.seed, &part, streams::OUTLIERS),
        )?;
        let detections = noisy_detections(&lasers, spec.sigma_l, &mut trial_rng(spec.seed, &part, streams::LASER_NOISE));
        images.push(BundleImage {
            image_id: format!("img{:02}", i + 1),
            pitch_deg,
            roll_deg,
            pose: pose.scaled(f),
            correspondences: features
                .into_iter()
                .map(|c| Correspondence::new(c.id, c.point * f, c.pixel))
                .collect(),
            detections,
            lasers,
            outlier_ids,
        });
    }
    Ok(SyntheticBundle {
        mesh: scale_mesh(&metric, f)?,
        camera: k,
        rig,
        images,
        true_scale: 1.0 / f,
    })
}
