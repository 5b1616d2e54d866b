//! JSON study descriptions and their CSV outputs.
//!
//! A study file holds one study or `{"studies": [...]}`. Each study is
//! tagged by `kind`:
//!
//! * `grid`: every pitch/roll view of a terrain, one row per view and method.
//! * `noise`: Monte Carlo table of mean and std of `s` per noise cell.
//! * `depth`: PCM error scatter against the spot depth difference.
//! * `bundle`: a synthetic image set (mesh, camera, rig, correspondences,
//!   detections and ground truth) for the `scale` command.
//!
//! Every CSV starts with a `# seed=…, config_sha256=…` line and a run writes
//! `manifest.json` listing the files with their digests.

use super::bundle::{synthesize_bundle, BundleSpec};
use super::montecarlo::{run_monte_carlo, MonteCarloSpec, StudyMethod};
use super::synth::{noisy_detections, perturb_features, sample_features, trace_lasers};
use super::{
    bin_by_depth_difference, default_camera, depth_discrepancy_study, generate_view, streams, surface_point,
    trial_rng, view_grid, NoiseSpec, SimError, TerrainKind, TerrainSpec, ViewSpec,
};
use crate::geometry::{CameraIntrinsics, CameraPose};
use crate::laser::{builtin_config, RigConfig};
use crate::mesh::MeshIndex;
use crate::poseest::{localize, LocalizeConfig};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

fn default_terrain_seed() -> u64 {
    7
}
fn default_distance() -> f64 {
    3.0
}
fn default_max_angle() -> f64 {
    40.0
}
fn default_step() -> f64 {
    5.0
}
fn default_features() -> usize {
    1500
}
fn default_true() -> bool {
    true
}
fn default_grid_methods() -> Vec<StudyMethod> {
    vec![StudyMethod::FcmAll, StudyMethod::Pcm, StudyMethod::Direct3d, StudyMethod::Davis]
}
fn default_terrains() -> Vec<TerrainKind> {
    vec![TerrainKind::Smooth, TerrainKind::Rough]
}
fn default_rigs() -> Vec<RigConfig> {
    vec![RigConfig::A, RigConfig::B, RigConfig::C]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridStudySpec {
    pub name: String,
    #[serde(default = "default_terrains")]
    pub terrains: Vec<TerrainKind>,
    #[serde(default = "default_terrain_seed")]
    pub terrain_seed: u64,
    #[serde(default = "default_rigs")]
    pub rigs: Vec<RigConfig>,
    #[serde(default)]
    pub anchor_xy: [f64; 2],
    #[serde(default = "default_distance")]
    pub distance_m: f64,
    #[serde(default = "default_max_angle")]
    pub max_angle_deg: f64,
    #[serde(default = "default_step")]
    pub step_deg: f64,
    #[serde(default = "default_features")]
    pub n_features: usize,
    #[serde(default)]
    pub sigma_f: f64,
    #[serde(default)]
    pub sigma_l: f64,
    #[serde(default)]
    pub outlier_ratio: f64,
    /// Methods that do not apply to a rig are left out of its file.
    #[serde(default = "default_grid_methods")]
    pub methods: Vec<StudyMethod>,
    /// Estimate the pose from the synthetic features; otherwise use the true pose.
    #[serde(default = "default_true")]
    pub localize: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_distances() -> Vec<f64> {
    vec![2.0, 3.0, 4.0]
}
fn default_noise_angle() -> f64 {
    15.0
}
fn default_sigma_f() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_sigma_l() -> Vec<f64> {
    vec![0.25, 0.5]
}
fn default_ratios() -> Vec<f64> {
    vec![0.0, 0.1, 0.2]
}
fn default_repeats() -> usize {
    500
}
fn default_noise_methods() -> Vec<StudyMethod> {
    vec![StudyMethod::FcmAll, StudyMethod::FcmSingle, StudyMethod::Pcm]
}
fn default_rig_b() -> RigConfig {
    RigConfig::B
}
fn default_smooth() -> TerrainKind {
    TerrainKind::Smooth
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseStudySpec {
    pub name: String,
    #[serde(default = "default_smooth")]
    pub terrain: TerrainKind,
    #[serde(default = "default_terrain_seed")]
    pub terrain_seed: u64,
    #[serde(default = "default_rig_b")]
    pub rig: RigConfig,
    #[serde(default)]
    pub anchor_xy: [f64; 2],
    #[serde(default = "default_distances")]
    pub distances: Vec<f64>,
    /// Views cycle through the pitch/roll grid up to this angle.
    #[serde(default = "default_noise_angle")]
    pub max_angle_deg: f64,
    #[serde(default = "default_step")]
    pub step_deg: f64,
    #[serde(default = "default_sigma_f")]
    pub sigma_f: Vec<f64>,
    #[serde(default = "default_sigma_l")]
    pub sigma_l: Vec<f64>,
    #[serde(default = "default_ratios")]
    pub outlier_ratios: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_features")]
    pub n_features: usize,
    #[serde(default = "default_noise_methods")]
    pub methods: Vec<StudyMethod>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseStudySpec {
    pub fn monte_carlo(&self) -> MonteCarloSpec {
        MonteCarloSpec {
            terrain: TerrainSpec::new(self.terrain, self.terrain_seed),
            anchor_xy: self.anchor_xy,
            rig: builtin_config(self.rig),
            distances: self.distances.clone(),
            angles: view_grid(self.max_angle_deg, self.step_deg),
            sigma_f: self.sigma_f.clone(),
            sigma_l: self.sigma_l.clone(),
            outlier_ratios: self.outlier_ratios.clone(),
            repeats: self.repeats,
            n_features: self.n_features,
            seed: self.seed,
            methods: self.methods.clone(),
        }
    }
}

fn default_rough() -> TerrainKind {
    TerrainKind::Rough
}
fn default_points() -> usize {
    2000
}
fn default_margin() -> f64 {
    1.0
}
fn default_edges() -> Vec<f64> {
    vec![0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthStudySpec {
    pub name: String,
    #[serde(default = "default_rough")]
    pub terrain: TerrainKind,
    #[serde(default = "default_terrain_seed")]
    pub terrain_seed: u64,
    #[serde(default = "default_rig_b")]
    pub rig: RigConfig,
    /// Index into the rig's pair list.
    #[serde(default)]
    pub pair: usize,
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default = "default_distances")]
    pub distances: Vec<f64>,
    /// Anchors keep this far from the terrain edge, meters.
    #[serde(default = "default_margin")]
    pub margin_m: f64,
    /// Bin edges on `|depth difference|`, meters.
    #[serde(default = "default_edges")]
    pub bin_edges: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudySpec {
    Grid(GridStudySpec),
    Noise(NoiseStudySpec),
    Depth(DepthStudySpec),
    Bundle(BundleSpec),
}

impl StudySpec {
    pub fn name(&self) -> &str {
        match self {
            StudySpec::Grid(s) => &s.name,
            StudySpec::Noise(s) => &s.name,
            StudySpec::Depth(s) => &s.name,
            StudySpec::Bundle(s) => &s.name,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            StudySpec::Grid(s) => s.seed,
            StudySpec::Noise(s) => s.seed,
            StudySpec::Depth(s) => s.seed,
            StudySpec::Bundle(s) => s.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            StudySpec::Grid(s) => s.seed = seed,
            StudySpec::Noise(s) => s.seed = seed,
            StudySpec::Depth(s) => s.seed = seed,
            StudySpec::Bundle(s) => s.seed = seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let name = self.name();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(SimError::InvalidSpec(format!(
                "study name {name:?} must be non-empty and use only letters, digits, '_' or '-'"
            )));
        }
        match self {
            StudySpec::Grid(g) => {
                if g.terrains.is_empty() || g.rigs.is_empty() || g.methods.is_empty() {
                    return Err(SimError::InvalidSpec("grid study needs terrains, rigs and methods".into()));
                }
                if !(g.step_deg > 0.0) {
                    return Err(SimError::InvalidSpec("step_deg must be positive".into()));
                }
                if g.n_features < 6 {
                    return Err(SimError::InvalidSpec("n_features must be at least 6".into()));
                }
                ViewSpec::new(Default::default(), g.max_angle_deg, 0.0, g.distance_m).validate()?;
                NoiseSpec {
                    sigma_f: g.sigma_f,
                    sigma_l: g.sigma_l,
                    outlier_ratio: g.outlier_ratio,
                    seed: g.seed,
                }
                .validate()
            }
            StudySpec::Noise(n) => {
                if !(n.step_deg > 0.0) {
                    return Err(SimError::InvalidSpec("step_deg must be positive".into()));
                }
                n.monte_carlo().validate()
            }
            StudySpec::Depth(d) => {
                let rig = builtin_config(d.rig);
                if d.pair >= rig.pairs.len() {
                    return Err(SimError::InvalidSpec(format!("rig {:?} has no pair {}", d.rig, d.pair)));
                }
                if d.n_points < 1 {
                    return Err(SimError::InvalidSpec("n_points must be at least 1".into()));
                }
                if d.distances.is_empty() || d.distances.iter().any(|x| !(*x > 0.0)) {
                    return Err(SimError::InvalidSpec("distances must be positive".into()));
                }
                if d.bin_edges.len() < 2 || d.bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(SimError::InvalidSpec("bin_edges must be increasing".into()));
                }
                if !(d.margin_m >= 0.0 && d.margin_m < TerrainSpec::new(d.terrain, 0).extent_m / 2.0) {
                    return Err(SimError::InvalidSpec("margin_m must be inside the terrain".into()));
                }
                Ok(())
            }
            StudySpec::Bundle(b) => b.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StudyFile {
    Many { studies: Vec<StudySpec> },
    One(StudySpec),
}

impl StudyFile {
    pub fn studies(&self) -> Vec<StudySpec> {
        match self {
            StudyFile::Many { studies } => studies.clone(),
            StudyFile::One(s) => vec![s.clone()],
        }
    }
}

pub fn load_study_file(path: &Path) -> Result<StudyFile, SimError> {
    let text = std::fs::read_to_string(path)?;
    let file: StudyFile = serde_json::from_str(&text).map_err(|source| SimError::Json {
        path: path.display().to_string(),
        source,
    })?;
    for s in file.studies() {
        s.validate()?;
    }
    Ok(file)
}

/// Hex SHA-256 of the spec's JSON serialization.
pub fn config_hash<T: Serialize>(spec: &T) -> String {
    let bytes = serde_json::to_vec(spec).expect("study specs serialize");
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `# seed=…, config_sha256=…`, the header and the rows.
pub fn write_csv_with_header<W: Write>(
    mut out: W,
    seed: u64,
    hash: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), SimError> {
    writeln!(out, "# seed={seed}, config_sha256={hash}")?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| SimError::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// One view of a grid study for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub terrain: TerrainKind,
    pub rig: RigConfig,
    pub pitch: f64,
    pub roll: f64,
    pub method: StudyMethod,
    /// `None` when the view or the method failed; `status` says why.
    pub s: Option<f64>,
    /// Per-beam (FCM) or per-pair values behind `s`.
    pub per_laser: Vec<(String, f64)>,
    pub status: String,
}

struct ViewObservation {
    truth: CameraPose,
    estimate: Result<CameraPose, String>,
}

fn observe_view(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    spec: &GridStudySpec,
    view: &ViewSpec,
    parts: &[u64],
) -> Result<ViewObservation, String> {
    let truth = generate_view(index, view).map_err(|e| e.to_string())?;
    let estimate = if spec.localize {
        let clean = sample_features(index, k, &truth, spec.n_features, &mut trial_rng(spec.seed, parts, streams::FEATURES))
            .map_err(|e| e.to_string())?;
        let noise = NoiseSpec {
            sigma_f: spec.sigma_f,
            sigma_l: spec.sigma_l,
            outlier_ratio: spec.outlier_ratio,
            seed: spec.seed,
        };
        let (corrs, _) = perturb_features(
            &clean,
            k,
            &noise,
            &mut trial_rng(spec.seed, parts, streams::FEATURE_NOISE),
            &mut trial_rng(spec.seed, parts, streams::OUTLIERS),
        )
        .map_err(|e| e.to_string())?;
        let mut config = LocalizeConfig::default();
        config.ransac.seed = trial_rng(spec.seed, parts, streams::RANSAC).next_u64();
        localize(&corrs, k, &config).map(|e| e.pose).map_err(|e| format!("localization: {e}"))
    } else {
        Ok(truth)
    };
    Ok(ViewObservation { truth, estimate })
}

/// Rows for every terrain, rig, view and applicable method, in that order.
pub fn run_grid_study(spec: &GridStudySpec) -> Result<Vec<GridRow>, SimError> {
    StudySpec::Grid(spec.clone()).validate()?;
    let k = default_camera();
    let angles = view_grid(spec.max_angle_deg, spec.step_deg);
    let mut rows = Vec::new();
    for (ti, &terrain) in spec.terrains.iter().enumerate() {
        let index = MeshIndex::build(TerrainSpec::new(terrain, spec.terrain_seed).generate());
        let anchor = surface_point(&index, spec.anchor_xy[0], spec.anchor_xy[1]).ok_or(SimError::AnchorOffSurface)?;
        let observations: Vec<Result<ViewObservation, String>> = angles
            .par_iter()
            .enumerate()
            .map(|(vi, &(p, r))| {
                let view = ViewSpec::new(anchor, p, r, spec.distance_m);
                observe_view(&index, &k, spec, &view, &[ti as u64, vi as u64])
            })
            .collect();
        for &rig_cfg in &spec.rigs {
            let rig = builtin_config(rig_cfg);
            let methods: Vec<StudyMethod> = spec.methods.iter().copied().filter(|m| m.applicable(&rig)).collect();
            let per_view: Vec<Vec<GridRow>> = angles
                .par_iter()
                .zip(&observations)
                .enumerate()
                .map(|(vi, (&(pitch, roll), obs))| {
                    let row = |method, s, per_laser, status: String| GridRow {
                        terrain,
                        rig: rig_cfg,
                        pitch,
                        roll,
                        method,
                        s,
                        per_laser,
                        status,
                    };
                    let pose = match obs {
                        Err(e) => return methods.iter().map(|&m| row(m, None, vec![], e.clone())).collect(),
                        Ok(o) => match &o.estimate {
                            Err(e) => return methods.iter().map(|&m| row(m, None, vec![], e.clone())).collect(),
                            Ok(p) => (o, *p),
                        },
                    };
                    let (o, est) = pose;
                    let lasers = trace_lasers(&index, &k, &o.truth, &rig);
                    let mut laser_rng = trial_rng(spec.seed, &[ti as u64, vi as u64], streams::LASER_NOISE);
                    let dets = noisy_detections(&lasers, spec.sigma_l, &mut laser_rng);
                    methods
                        .iter()
                        .map(|&m| match m.evaluate(&index, &k, &est, &rig, &dets) {
                            Ok(s) => row(
                                m,
                                Some(s.value),
                                s.entries.iter().map(|e| (e.key.clone(), e.s)).collect(),
                                "ok".into(),
                            ),
                            Err(e) => row(m, None, vec![], e.to_string()),
                        })
                        .collect()
                })
                .collect();
            rows.extend(per_view.into_iter().flatten());
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub study: String,
    pub file: String,
    /// Data rows of a CSV, triangles of a mesh, 1 for a JSON document.
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub seed: Vec<(String, u64)>,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Runs every study in the file and writes the CSVs and `manifest.json`
/// into `out_dir`. A `seed` overrides the seeds of all studies.
pub fn run_study(file: &StudyFile, out_dir: &Path, seed: Option<u64>) -> Result<StudyManifest, SimError> {
    let mut studies = file.studies();
    if let Some(s) = seed {
        for st in &mut studies {
            st.set_seed(s);
        }
    }
    for st in &studies {
        st.validate()?;
    }
    let mut names = std::collections::BTreeSet::new();
    for st in &studies {
        if !names.insert(st.name().to_string()) {
            return Err(SimError::InvalidSpec(format!("duplicate study name {:?}", st.name())));
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = StudyManifest {
        seed: Vec::new(),
        config_sha256: config_hash(&studies),
        files: Vec::new(),
    };
    for st in &studies {
        let hash = config_hash(st);
        let seed = st.seed();
        manifest.seed.push((st.name().to_string(), seed));
        let mut emit_bytes = |file: String, rows: usize, bytes: Vec<u8>| -> Result<(), SimError> {
            let path: PathBuf = out_dir.join(&file);
            std::fs::write(&path, &bytes)?;
            manifest.files.push(ManifestEntry {
                study: st.name().to_string(),
                file,
                rows,
                sha256: hex(&Sha256::digest(&bytes)),
            });
            Ok(())
        };
        let mut emit = |file: String, header: &[&str], rows: Vec<Vec<String>>| -> Result<(), SimError> {
            let mut bytes = Vec::new();
            write_csv_with_header(&mut bytes, seed, &hash, header, &rows)?;
            emit_bytes(file, rows.len(), bytes)
        };
        match st {
            StudySpec::Grid(g) => {
                let rows = run_grid_study(g)?;
                for &terrain in &g.terrains {
                    for &rig in &g.rigs {
                        let body: Vec<Vec<String>> = rows
                            .iter()
                            .filter(|r| r.terrain == terrain && r.rig == rig)
                            .map(|r| {
                                vec![
                                    fmt(r.pitch),
                                    fmt(r.roll),
                                    r.method.name().into(),
                                    r.s.map(fmt).unwrap_or_default(),
                                    r.s.map(|s| fmt((s - 1.0).abs())).unwrap_or_default(),
                                    r.status.clone(),
                                ]
                            })
                            .collect();
                        emit(
                            format!("grid_{}_{}_{:?}.csv", g.name, terrain.name(), rig),
                            &["pitch_deg", "roll_deg", "method", "s", "abs_error", "status"],
                            body,
                        )?;
                    }
                }
            }
            StudySpec::Noise(n) => {
                let out = run_monte_carlo(&n.monte_carlo())?;
                let body = out
                    .cells
                    .iter()
                    .map(|c| {
                        vec![
                            fmt(c.distance),
                            fmt(c.sigma_f),
                            fmt(c.sigma_l),
                            fmt(c.outlier_ratio),
                            c.key.method.name().into(),
                            c.n.to_string(),
                            c.failures.to_string(),
                            fmt(c.mean),
                            fmt(c.std),
                        ]
                    })
                    .collect();
                emit(
                    format!("noise_{}.csv", n.name),
                    &["distance_m", "sigma_f_px", "sigma_l_px", "outlier_ratio", "method", "n", "failures", "mean", "std"],
                    body,
                )?;
            }
            StudySpec::Depth(d) => {
                let terrain = TerrainSpec::new(d.terrain, d.terrain_seed);
                let index = MeshIndex::build(terrain.generate());
                let rig = builtin_config(d.rig);
                let half = terrain.extent_m / 2.0 - d.margin_m;
                let study = depth_discrepancy_study(&index, &rig, &rig.pairs[d.pair], d.n_points, &d.distances, half, d.seed)?;
                let scatter = study
                    .samples
                    .iter()
                    .map(|s| vec![s.point.to_string(), fmt(s.distance), fmt(s.depth_diff), fmt(s.s)])
                    .collect();
                emit(
                    format!("depth_{}.csv", d.name),
                    &["point", "distance_m", "depth_diff_m", "s"],
                    scatter,
                )?;
                let mut bins = Vec::new();
                for &dist in &d.distances {
                    for b in bin_by_depth_difference(study.at_distance(dist), &d.bin_edges) {
                        bins.push(vec![fmt(dist), fmt(b.lo), fmt(b.hi), b.n.to_string(), fmt(b.mean_abs_error)]);
                    }
                }
                emit(
                    format!("depth_{}_bins.csv", d.name),
                    &["distance_m", "lo_m", "hi_m", "n", "mean_abs_error"],
                    bins,
                )?;
                let skipped = study
                    .skipped
                    .iter()
                    .map(|(k, v)| vec![k.clone(), v.to_string()])
                    .collect();
                emit(format!("depth_{}_skipped.csv", d.name), &["reason", "count"], skipped)?;
            }
            StudySpec::Bundle(b) => {
                for (file, rows, bytes) in bundle_files(b, &hash)? {
                    emit_bytes(file, rows, bytes)?;
                }
            }
        }
    }
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    std::fs::write(out_dir.join("manifest.json"), json)?;
    Ok(manifest)
}

/// Files of a synthetic bundle as `(name, rows, bytes)`.
fn bundle_files(spec: &BundleSpec, hash: &str) -> Result<Vec<(String, usize, Vec<u8>)>, SimError> {
    let b = synthesize_bundle(spec)?;
    let name = &spec.name;
    let comment = format!("seed={}, config_sha256={hash}", spec.seed);
    let json = |v: serde_json::Value| {
        let mut bytes = serde_json::to_vec_pretty(&v).expect("values serialize");
        bytes.push(b'\n');
        bytes
    };
    let mut files = Vec::new();

    let mut mesh = format!("# {comment}\n").into_bytes();
    crate::mesh::write_obj(&b.mesh, &mut mesh)?;
    files.push((format!("{name}_mesh.obj"), b.mesh.triangle_count(), mesh));
    files.push((format!("{name}_camera.json"), 1, json(serde_json::to_value(b.camera).expect("camera serializes"))));
    files.push((format!("{name}_rig.json"), 1, json(serde_json::to_value(&b.rig).expect("rig serializes"))));

    let mut corr = Vec::new();
    crate::poseest::write_correspondences(
        b.images.iter().map(|i| (i.image_id.as_str(), i.correspondences.as_slice())),
        std::slice::from_ref(&comment),
        &mut corr,
    )?;
    let n_corr = b.images.iter().map(|i| i.correspondences.len()).sum();
    files.push((format!("{name}_correspondences.csv"), n_corr, corr));

    let det_rows: Vec<Vec<String>> = b
        .images
        .iter()
        .flat_map(|i| {
            i.detections
                .iter()
                .map(|d| vec![i.image_id.clone(), d.beam_id.to_string(), fmt(d.pixel.u), fmt(d.pixel.v)])
        })
        .collect();
    let mut det = Vec::new();
    write_csv_with_header(&mut det, spec.seed, hash, &["image_id", "beam_id", "u", "v"], &det_rows)?;
    files.push((format!("{name}_detections.csv"), det_rows.len(), det));

    let truth_rows: Vec<Vec<String>> = b
        .images
        .iter()
        .map(|i| {
            let m = i.pose.rotation().matrix();
            let mut row = vec![i.image_id.clone(), fmt(b.true_scale), fmt(i.pitch_deg), fmt(i.roll_deg)];
            row.extend((0..9).map(|j| fmt(m[(j / 3, j % 3)])));
            row.extend(i.pose.center().iter().map(|&x| fmt(x)));
            row.push(i.detections.len().to_string());
            row.push(i.outlier_ids.len().to_string());
            row
        })
        .collect();
    let mut truth = Vec::new();
    write_csv_with_header(
        &mut truth,
        spec.seed,
        hash,
        &[
            "image_id", "true_s", "pitch_deg", "roll_deg", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22",
            "cx", "cy", "cz", "detections", "outliers",
        ],
        &truth_rows,
    )?;
    files.push((format!("{name}_truth.csv"), truth_rows.len(), truth));
    Ok(files)
}
