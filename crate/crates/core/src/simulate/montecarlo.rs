//! Seeded Monte Carlo over distances, noise levels and scaling methods.
//!
//! Every trial synthesizes observations for one view, localizes the camera
//! from the noisy features and evaluates each method with the estimated
//! pose. Trials sharing a distance and trial index use the same feature
//! sample and the same standard-normal draws, so cells that differ only in a
//! noise level are directly comparable.

use super::synth::{detections_from_normals, perturb_features, sample_features, trace_lasers};
use super::{default_camera, generate_view, streams, surface_point, trial_rng, NoiseSpec, SimError, TerrainSpec, ViewSpec};
use crate::geometry::{CameraIntrinsics, CameraPose};
use crate::laser::LaserRig;
use crate::mesh::MeshIndex;
use crate::poseest::{localize, LocalizeConfig};
use crate::scaling::{
    davis_scale, detection, direct3d_scale_all, fcm_scale_all, fcm_scale_single, mean_and_std, pcm_scale_all,
    LaserDetection, ScaleError, ScaleEstimate,
};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMethod {
    /// FCM averaged over every beam.
    FcmAll,
    /// FCM on the first beam of the rig.
    FcmSingle,
    Pcm,
    Direct3d,
    Davis,
}

impl StudyMethod {
    pub const ALL: [StudyMethod; 5] = [
        StudyMethod::FcmAll,
        StudyMethod::FcmSingle,
        StudyMethod::Pcm,
        StudyMethod::Direct3d,
        StudyMethod::Davis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyMethod::FcmAll => "fcm_all",
            StudyMethod::FcmSingle => "fcm_single",
            StudyMethod::Pcm => "pcm",
            StudyMethod::Direct3d => "direct3d",
            StudyMethod::Davis => "davis",
        }
    }

    /// Whether the rig carries what the method needs.
    pub fn applicable(self, rig: &LaserRig) -> bool {
        match self {
            StudyMethod::FcmAll | StudyMethod::FcmSingle => true,
            StudyMethod::Pcm | StudyMethod::Direct3d => !rig.pairs.is_empty(),
            StudyMethod::Davis => rig.beams.len() >= 3 && rig.beams.iter().all(|b| b.is_axis_aligned(1e-6)),
        }
    }

    /// Scale of one image, with per-beam or per-pair values.
    pub fn evaluate(
        self,
        index: &MeshIndex,
        k: &CameraIntrinsics,
        pose: &CameraPose,
        rig: &LaserRig,
        dets: &[LaserDetection],
    ) -> Result<ScaleEstimate, ScaleError> {
        match self {
            StudyMethod::FcmAll => fcm_scale_all(index, k, pose, rig, dets),
            StudyMethod::FcmSingle => {
                let beam = &rig.beams[0];
                let m = fcm_scale_single(index, k, pose, beam, detection(dets, beam.id)?)?;
                ScaleEstimate::from_entries(crate::scaling::ScaleMethod::Fcm, vec![m.entry()], vec![])
            }
            StudyMethod::Pcm => pcm_scale_all(index, k, pose, rig, dets),
            StudyMethod::Direct3d => direct3d_scale_all(index, k, pose, rig, dets),
            StudyMethod::Davis => davis_scale(index, k, pose, rig, dets),
        }
    }
}

impl fmt::Display for StudyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StudyMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        StudyMethod::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown study method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub terrain: TerrainSpec,
    /// Horizontal position of the surface point all views look at.
    pub anchor_xy: [f64; 2],
    pub rig: LaserRig,
    pub distances: Vec<f64>,
    /// `(pitch, roll)` in degrees. Trial `i` uses entry `i mod len`.
    pub angles: Vec<(f64, f64)>,
    pub sigma_f: Vec<f64>,
    pub sigma_l: Vec<f64>,
    pub outlier_ratios: Vec<f64>,
    /// Trials per cell.
    pub repeats: usize,
    pub n_features: usize,
    pub seed: u64,
    pub methods: Vec<StudyMethod>,
}

impl MonteCarloSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSpec(m.into()));
        if self.repeats < 1 {
            return bad("repeats must be at least 1");
        }
        if self.n_features < 6 {
            return bad("n_features must be at least 6");
        }
        if self.distances.is_empty() || self.distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("distances must be a non-empty list of positive values");
        }
        if self.angles.is_empty() || self.sigma_f.is_empty() || self.sigma_l.is_empty() || self.outlier_ratios.is_empty() {
            return bad("angles, sigma_f, sigma_l and outlier_ratios must be non-empty");
        }
        for &(p, r) in &self.angles {
            ViewSpec::new(crate::geometry::Vec3::zeros(), p, r, 1.0).validate()?;
        }
        for &f in &self.sigma_f {
            for &l in &self.sigma_l {
                for &r in &self.outlier_ratios {
                    NoiseSpec { sigma_f: f, sigma_l: l, outlier_ratio: r, seed: 0 }.validate()?;
                }
            }
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        for m in &self.methods {
            if !m.applicable(&self.rig) {
                return Err(SimError::InvalidSpec(format!("method {m} does not apply to this rig")));
            }
        }
        self.rig.validate()?;
        Ok(())
    }
}

/// Index of a table cell: positions in the spec's lists plus the method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub distance: usize,
    pub sigma_f: usize,
    pub sigma_l: usize,
    pub outlier_ratio: usize,
    pub method: StudyMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub key: CellKey,
    pub trial: usize,
    pub view: ViewSpec,
    pub s: f64,
    pub per_laser: Vec<(String, f64)>,
    /// Rotation error (rad) and center error (model units) of the estimated pose.
    pub pose_error: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCell {
    pub key: CellKey,
    pub distance: f64,
    pub sigma_f: f64,
    pub sigma_l: f64,
    pub outlier_ratio: f64,
    pub n: usize,
    pub failures: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOutput {
    /// Sorted by key.
    pub cells: Vec<MonteCarloCell>,
    pub trials: Vec<TrialResult>,
    /// Failure reasons with their counts.
    pub failure_reasons: BTreeMap<String, usize>,
}

impl MonteCarloOutput {
    pub fn cell(&self, key: &CellKey) -> Option<&MonteCarloCell> {
        self.cells.iter().find(|c| &c.key == key)
    }
}

struct TrialOutcome {
    results: Vec<TrialResult>,
    failures: Vec<(CellKey, String)>,
}

pub fn run_monte_carlo(spec: &MonteCarloSpec) -> Result<MonteCarloOutput, SimError> {
    spec.validate()?;
    let k = default_camera();
    let index = MeshIndex::build(spec.terrain.generate());
    let anchor = surface_point(&index, spec.anchor_xy[0], spec.anchor_xy[1]).ok_or(SimError::AnchorOffSurface)?;

    // true poses, shared by every trial that uses the same view
    let views: Vec<Vec<(ViewSpec, Result<CameraPose, String>)>> = spec
        .distances
        .iter()
        .map(|&d| {
            spec.angles
                .iter()
                .map(|&(p, r)| {
                    let v = ViewSpec::new(anchor, p, r, d);
                    (v, generate_view(&index, &v).map_err(|e| e.to_string()))
                })
                .collect()
        })
        .collect();

    let mut tasks = Vec::new();
    for di in 0..spec.distances.len() {
        for fi in 0..spec.sigma_f.len() {
            for ri in 0..spec.outlier_ratios.len() {
                for t in 0..spec.repeats {
                    tasks.push((di, fi, ri, t));
                }
            }
        }
    }
    let outcomes: Vec<TrialOutcome> = tasks
        .into_par_iter()
        .map(|(di, fi, ri, t)| run_trial(spec, &index, &k, &views[di], (di, fi, ri, t)))
        .collect();

    let mut values: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
    let mut failures: BTreeMap<CellKey, usize> = BTreeMap::new();
    let mut failure_reasons: BTreeMap<String, usize> = BTreeMap::new();
    let mut trials = Vec::new();
    for o in outcomes {
        for r in o.results {
            values.entry(r.key).or_default().push(r.s);
            trials.push(r);
        }
        for (key, reason) in o.failures {
            *failures.entry(key).or_default() += 1;
            *failure_reasons.entry(reason).or_default() += 1;
        }
    }
    let mut cells = Vec::new();
    for di in 0..spec.distances.len() {
        for fi in 0..spec.sigma_f.len() {
            for li in 0..spec.sigma_l.len() {
                for ri in 0..spec.outlier_ratios.len() {
                    for &method in &spec.methods {
                        let key = CellKey {
                            distance: di,
                            sigma_f: fi,
                            sigma_l: li,
                            outlier_ratio: ri,
                            method,
                        };
                        let v = values.get(&key).map(Vec::as_slice).unwrap_or(&[]);
                        let (mean, std) = mean_and_std(v);
                        cells.push(MonteCarloCell {
                            key,
                            distance: spec.distances[di],
                            sigma_f: spec.sigma_f[fi],
                            sigma_l: spec.sigma_l[li],
                            outlier_ratio: spec.outlier_ratios[ri],
                            n: v.len(),
                            failures: failures.get(&key).copied().unwrap_or(0),
                            mean,
                            std,
                        });
                    }
                }
            }
        }
    }
    cells.sort_by_key(|c| c.key);
    Ok(MonteCarloOutput {
        cells,
        trials,
        failure_reasons,
    })
}

fn run_trial(
    spec: &MonteCarloSpec,
    index: &MeshIndex,
    k: &CameraIntrinsics,
    views: &[(ViewSpec, Result<CameraPose, String>)],
    (di, fi, ri, t): (usize, usize, usize, usize),
) -> TrialOutcome {
    let keys = |li: usize| {
        spec.methods.iter().map(move |&method| CellKey {
            distance: di,
            sigma_f: fi,
            sigma_l: li,
            outlier_ratio: ri,
            method,
        })
    };
    let fail_all = |reason: String| TrialOutcome {
        results: Vec::new(),
        failures: (0..spec.sigma_l.len()).flat_map(keys).map(|k| (k, reason.clone())).collect(),
    };

    let (view, pose) = &views[t % views.len()];
    let truth = match pose {
        Ok(p) => *p,
        Err(e) => return fail_all(format!("view: {e}")),
    };
    // shared across noise levels: the feature sample and the normal draws
    let shared = [di as u64, t as u64];
    let clean = match sample_features(index, k, &truth, spec.n_features, &mut trial_rng(spec.seed, &shared, streams::FEATURES)) {
        Ok(c) => c,
        Err(e) => return fail_all(format!("synthesis: {e}")),
    };
    let noise = NoiseSpec {
        sigma_f: spec.sigma_f[fi],
        sigma_l: 0.0,
        outlier_ratio: spec.outlier_ratios[ri],
        seed: spec.seed,
    };
    let perturbed = perturb_features(
        &clean,
        k,
        &noise,
        &mut trial_rng(spec.seed, &shared, streams::FEATURE_NOISE),
        &mut trial_rng(spec.seed, &shared, streams::OUTLIERS),
    );
    let corrs = match perturbed {
        Ok((c, _)) => c,
        Err(e) => return fail_all(format!("synthesis: {e}")),
    };
    let lasers = trace_lasers(index, k, &truth, &spec.rig);
    let mut laser_rng = trial_rng(spec.seed, &shared, streams::LASER_NOISE);
    let normals: Vec<(f64, f64)> = lasers
        .iter()
        .map(|_| (laser_rng.sample(StandardNormal), laser_rng.sample(StandardNormal)))
        .collect();

    let mut config = LocalizeConfig::default();
    config.ransac.seed = trial_rng(spec.seed, &[di as u64, fi as u64, ri as u64, t as u64], streams::RANSAC).next_u64();
    let est = match localize(&corrs, k, &config) {
        Ok(e) => e,
        Err(e) => return fail_all(format!("localization: {e}")),
    };
    let pose_error = est.pose.error_to(&truth);

    let mut out = TrialOutcome {
        results: Vec::new(),
        failures: Vec::new(),
    };
    for (li, &sigma_l) in spec.sigma_l.iter().enumerate() {
        let dets = detections_from_normals(&lasers, sigma_l, &normals);
        for key in keys(li) {
            match key.method.evaluate(index, k, &est.pose, &spec.rig, &dets) {
                Ok(s) => out.results.push(TrialResult {
                    key,
                    trial: t,
                    view: *view,
                    s: s.value,
                    per_laser: s.entries.iter().map(|e| (e.key.clone(), e.s)).collect(),
                    pose_error,
                }),
                Err(e) => out.failures.push((key, format!("{}: {e}", key.method))),
            }
        }
    }
    out
}
