//! Synthetic validation: procedural terrains, camera views around a surface
//! point, ground-truth feature and laser observations with noise, and
//! seeded Monte Carlo studies.

mod bundle;
mod depth;
mod montecarlo;
mod study;
mod synth;
pub mod terrain;
mod view;

pub use bundle::{synthesize_bundle, BundleImage, BundleSpec, SyntheticBundle};
pub use depth::{bin_by_depth_difference, depth_discrepancy_study, DepthBin, DepthSample, DepthStudy};
pub use montecarlo::{
    run_monte_carlo, CellKey, MonteCarloCell, MonteCarloOutput, MonteCarloSpec, StudyMethod, TrialResult,
};
pub use study::{
    config_hash, load_study_file, run_grid_study, run_study, write_csv_with_header, DepthStudySpec,
    GridRow, GridStudySpec, ManifestEntry, NoiseStudySpec, StudyFile, StudyManifest, StudySpec,
};
pub use synth::{
    noisy_detections, perturb_features, sample_features, synthesize_observations, trace_lasers, GroundTruth,
    LaserStatus, LaserTruth, NoiseSpec, Observations,
};
pub use terrain::{generate_terrain, TerrainKind, TerrainSpec};
pub use view::{generate_view, surface_point, view_grid, ViewSpec, MAX_VIEW_ANGLE_DEG, NORMAL_RADIUS_M};

use crate::geometry::CameraIntrinsics;
use crate::laser::LaserError;
use crate::mesh::MeshError;
use crate::poseest::PoseError;
use crate::scaling::ScaleError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("camera center lies below the surface")]
    CameraInsideMesh,
    #[error("principal ray is blocked before reaching the anchor")]
    ViewOccluded,
    #[error("anchor is not on the surface")]
    AnchorOffSurface,
    #[error("only {got} of {needed} features could be placed on visible surface")]
    InsufficientVisibleSurface { got: usize, needed: usize },
    #[error("invalid study specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Laser(#[from] LaserError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Camera used by the simulations: 1920×1080, mild barrel distortion.
pub fn default_camera() -> CameraIntrinsics {
    CameraIntrinsics::pinhole(1400.0, 1400.0, 960.0, 540.0)
        .with_distortion(-0.05, 0.01, 0.0)
        .with_image_size(1920, 1080)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one trial and one random stream. The key mixes the study
/// seed with the trial coordinates, so every trial draws the same numbers no
/// matter which worker runs it or in what order.
pub fn trial_rng(seed: u64, parts: &[u64], stream: u64) -> ChaCha8Rng {
    let mut key = splitmix(seed);
    for &p in parts {
        key = splitmix(key ^ p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// Stream ids: each kind of randomness draws from its own sequence so that
/// changing one noise level leaves the other draws untouched.
pub(crate) mod streams {
    pub const FEATURES: u64 = 1;
    pub const FEATURE_NOISE: u64 = 2;
    pub const OUTLIERS: u64 = 3;
    pub const LASER_NOISE: u64 = 4;
    pub const RANSAC: u64 = 5;
    pub const ANCHORS: u64 = 6;
}
