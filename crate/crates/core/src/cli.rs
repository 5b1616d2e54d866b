//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 localization failure,
//! 4 scaling failure, 1 anything else (such as an unwritable output).

use crate::geometry::CameraIntrinsics;
use crate::laser::{calibrate_rig, read_calibration_observations, LaserError, LaserRig};
use crate::mesh::{load_mesh, MeshIndex};
use crate::poseest::{localize, read_correspondences, Correspondence, LocalizeConfig, MinimalSolver, PoseEstimate};
use crate::scaling::{
    aggregate_report, read_detections, read_report_csv, write_report_csv, ImageScale, LaserDetection, ScaleError,
    ScaleMethod, ScaleReport,
};
use crate::simulate::{load_study_file, run_study, SimError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_LOCALIZATION: i32 = 3;
pub const EXIT_SCALING: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "laserscale", version, about = "Metric scale for monocular 3D models from laser-scaler spots")]
pub struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "LASERSCALE_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit beam lines to camera-frame observations and write a rig file.
    Calibrate(CalibrateArgs),
    /// Estimate one camera pose per image from 2D-3D correspondences.
    Localize(LocalizeArgs),
    /// Localize every image and estimate the model scale from laser spots.
    Scale(ScaleArgs),
    /// Run the studies of a study file and write their CSVs.
    Simulate(SimulateArgs),
    /// Summarize one or more scale reports across images.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with `beam_id,x,y,z` camera-frame points, meters.
    #[arg(long)]
    pub obs: PathBuf,
    /// Output rig JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Declare a beam pair `A,B`; its distance is the perpendicular beam separation.
    #[arg(long = "pair", value_name = "A,B")]
    pub pairs: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    P3p,
    Dlt,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// Camera intrinsics JSON.
    #[arg(long)]
    pub camera: PathBuf,
    /// CSV with `[image_id,]id,X,Y,Z,u,v` rows.
    #[arg(long)]
    pub correspondences: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::P3p)]
    pub solver: SolverArg,
    /// Also refine fx, fy, cx, cy during localization.
    #[arg(long)]
    pub refine_intrinsics: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output poses CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fcm,
    Pcm,
    Davis,
    Direct3d,
    /// Every method the rig supports.
    All,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Model mesh (OBJ or PLY).
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub camera: PathBuf,
    #[arg(long)]
    pub rig: PathBuf,
    #[arg(long)]
    pub correspondences: PathBuf,
    /// CSV with `image_id,beam_id,u,v` rows.
    #[arg(long)]
    pub detections: PathBuf,
    /// Methods, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub method: Vec<MethodArg>,
    #[arg(long, value_enum, default_value_t = SolverArg::P3p)]
    pub solver: SolverArg,
    /// Also refine fx, fy, cx, cy during localization.
    #[arg(long)]
    pub refine_intrinsics: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output report CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Study JSON.
    pub study: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the seed of every study.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report CSVs written by `scale`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Writes the combined report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn other(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::other(e.to_string())
    }
}

/// What a command read and how it was configured. Its digest is written into
/// every output; input files contribute their content digest, not their path.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<InputFile>,
    pub options: BTreeMap<String, String>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub role: String,
    #[serde(skip)]
    pub path: PathBuf,
    pub sha256: String,
}

impl RunConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            inputs: Vec::new(),
            options: BTreeMap::new(),
            seed,
        }
    }

    /// Records an input file; fails when it cannot be read.
    pub fn input(mut self, role: &str, path: &Path) -> Result<Self, CliError> {
        if !path.is_file() {
            return Err(CliError::input(format!("{role} file not found: {}", path.display())));
        }
        let bytes = std::fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputFile {
            role: role.into(),
            path: path.to_path_buf(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
        Ok(self)
    }

    pub fn option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.into(), value.to_string());
        self
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("run config serializes")))
    }

    /// First comment line of every output.
    pub fn stamp(&self) -> String {
        format!("seed={}, config_sha256={}", self.seed, self.hash())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Runs a parsed command inside a worker pool of the requested size.
pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::input("--jobs must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::other(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Calibrate(a) => cmd_calibrate(&a),
        Command::Localize(a) => cmd_localize(&a),
        Command::Scale(a) => cmd_scale(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Report(a) => cmd_report(&a),
    })
}

fn laser_error(e: LaserError) -> CliError {
    match e {
        LaserError::Io(io) => CliError::other(io.to_string()),
        other => CliError::input(other.to_string()),
    }
}

#[derive(Serialize)]
struct RigFile<'a> {
    #[serde(flatten)]
    rig: &'a LaserRig,
    seed: u64,
    config_sha256: String,
}

fn parse_pair(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::input(format!("--pair expects two beam ids as A,B, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn cmd_calibrate(a: &CalibrateArgs) -> Result<i32, CliError> {
    let mut config = RunConfig::new("calibrate", a.seed).input("observations", &a.obs)?;
    let pairs = a.pairs.iter().map(|p| parse_pair(p)).collect::<Result<Vec<_>, _>>()?;
    config = config.option("pairs", format!("{pairs:?}"));
    let obs = read_calibration_observations(&a.obs).map_err(laser_error)?;
    let mut rig = calibrate_rig(&obs).map_err(laser_error)?;
    for (x, y) in pairs {
        rig = rig.with_perpendicular_pair(x, y).map_err(laser_error)?;
    }
    let file = RigFile {
        rig: &rig,
        seed: config.seed,
        config_sha256: config.hash(),
    };
    let text = serde_json::to_string_pretty(&file).expect("rig serializes") + "\n";
    std::fs::write(&a.out, text).map_err(|e| CliError::other(format!("{}: {e}", a.out.display())))?;

    let mut out = String::new();
    let _ = writeln!(out, "beam  obs  span_m  rms_mm   origin_x_m  origin_y_m  dir_x      dir_y      dir_z");
    for (b, f) in rig.beams.iter().zip(&rig.calibration) {
        let _ = writeln!(
            out,
            "{:<4}  {:>3}  {:>6.3}  {:>7.4}  {:>10.5}  {:>10.5}  {:>9.6}  {:>9.6}  {:>9.6}",
            b.id,
            f.observations,
            f.depth_span_m,
            f.rms_m * 1e3,
            b.origin.x,
            b.origin.y,
            b.direction.x,
            b.direction.y,
            b.direction.z
        );
    }
    for p in &rig.pairs {
        let _ = writeln!(out, "pair {}-{}: {:.6} m", p.a, p.b, p.distance_m);
    }
    print!("{out}");
    Ok(EXIT_OK)
}

fn load_camera(path: &Path) -> Result<CameraIntrinsics, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let k: CameraIntrinsics =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    k.validate()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(k)
}

fn load_correspondences(path: &Path) -> Result<BTreeMap<String, Vec<Correspondence>>, CliError> {
    read_correspondences(path).map_err(|e| CliError::input(e.to_string()))
}

fn localize_config(solver: SolverArg, refine_intrinsics: bool, seed: u64, image_id: &str) -> LocalizeConfig {
    let mut config = LocalizeConfig::default();
    config.refine.refine_intrinsics = refine_intrinsics;
    config.ransac.solver = match solver {
        SolverArg::P3p => MinimalSolver::P3p,
        SolverArg::Dlt => MinimalSolver::Dlt,
    };
    // keyed by image id so an image's result does not depend on the others
    let digest = Sha256::digest(format!("{seed}:{image_id}").as_bytes());
    config.ransac.seed = u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"));
    config
}

fn pose_row(image_id: &str, est: &PoseEstimate, n: usize) -> Vec<String> {
    let m = est.pose.rotation().matrix();
    let c = est.pose.center();
    let mut row = vec![
        image_id.to_string(),
        "ok".into(),
        n.to_string(),
        est.inlier_ids.len().to_string(),
        format!("{:.6}", est.rms_px),
        est.threshold_px.map(|t| format!("{t:.6}")).unwrap_or_default(),
    ];
    row.extend((0..9).map(|j| format!("{:.12}", m[(j / 3, j % 3)])));
    row.extend(c.iter().map(|x| format!("{x:.12}")));
    row
}

pub fn cmd_localize(a: &LocalizeArgs) -> Result<i32, CliError> {
    let config = RunConfig::new("localize", a.seed)
        .input("camera", &a.camera)?
        .input("correspondences", &a.correspondences)?
        .option("solver", format!("{:?}", a.solver))
        .option("refine_intrinsics", a.refine_intrinsics);
    let k = load_camera(&a.camera)?;
    let images = load_correspondences(&a.correspondences)?;
    let results: Vec<(String, usize, Result<PoseEstimate, String>)> = images
        .par_iter()
        .map(|(id, corrs)| {
            let est = localize(corrs, &k, &localize_config(a.solver, a.refine_intrinsics, a.seed, id)).map_err(|e| e.to_string());
            (id.clone(), corrs.len(), est)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for (id, n, r) in &results {
        match r {
            Ok(est) => {
                println!("{id}: {} of {n} inliers, rms {:.3} px", est.inlier_ids.len(), est.rms_px);
                rows.push(pose_row(id, est, *n));
            }
            Err(e) => {
                failed += 1;
                eprintln!("{id}: localization failed: {e}");
                let mut row = vec![id.clone(), e.clone(), n.to_string()];
                row.resize(POSE_HEADER.len(), String::new());
                rows.push(row);
            }
        }
    }
    let mut bytes = Vec::new();
    crate::simulate::write_csv_with_header(&mut bytes, config.seed, &config.hash(), &POSE_HEADER, &rows)
        .map_err(|e| CliError::other(e.to_string()))?;
    std::fs::write(&a.out, bytes).map_err(|e| CliError::other(format!("{}: {e}", a.out.display())))?;
    Ok(if failed > 0 { EXIT_LOCALIZATION } else { EXIT_OK })
}

const POSE_HEADER: [&str; 18] = [
    "image_id", "status", "correspondences", "inliers", "rms_px", "threshold_px", "r00", "r01", "r02", "r10", "r11",
    "r12", "r20", "r21", "r22", "cx", "cy", "cz",
];

/// Methods to run. `all` keeps those the rig supports; a method named
/// explicitly must be supported.
fn select_methods(args: &[MethodArg], rig: &LaserRig) -> Result<Vec<ScaleMethod>, CliError> {
    let mut out = Vec::new();
    let all = args.contains(&MethodArg::All);
    let candidates: Vec<ScaleMethod> = if all {
        ScaleMethod::ALL.to_vec()
    } else {
        args.iter()
            .map(|m| match m {
                MethodArg::Fcm => ScaleMethod::Fcm,
                MethodArg::Pcm => ScaleMethod::Pcm,
                MethodArg::Davis => ScaleMethod::Davis,
                MethodArg::Direct3d => ScaleMethod::Direct3d,
                MethodArg::All => unreachable!("handled above"),
            })
            .collect()
    };
    for m in candidates {
        if out.contains(&m) {
            continue;
        }
        match m.check_rig(rig) {
            Ok(()) => out.push(m),
            Err(e) if all => eprintln!("skipping {m}: {e}"),
            Err(e) => return Err(CliError::input(format!("method {m}: {e}"))),
        }
    }
    Ok(out)
}

type ImageInputs = (String, Vec<Correspondence>, Vec<LaserDetection>);

/// Pairs correspondence and detection groups by image id. A correspondence
/// file without image ids pairs with a detection file holding one image.
fn pair_images(
    mut corrs: BTreeMap<String, Vec<Correspondence>>,
    dets: BTreeMap<String, Vec<LaserDetection>>,
) -> Result<Vec<ImageInputs>, CliError> {
    if corrs.len() == 1 && corrs.contains_key("") && !dets.contains_key("") {
        if dets.len() != 1 {
            return Err(CliError::input(format!(
                "correspondences have no image_id column but detections cover {} images",
                dets.len()
            )));
        }
        let list = corrs.remove("").expect("checked above");
        corrs.insert(dets.keys().next().expect("one image").clone(), list);
    }
    let mut ids: Vec<String> = corrs.keys().chain(dets.keys()).cloned().collect();
    ids.sort();
    ids.dedup();
    Ok(ids
        .into_iter()
        .map(|id| {
            let c = corrs.get(&id).cloned().unwrap_or_default();
            let d = dets.get(&id).cloned().unwrap_or_default();
            (id, c, d)
        })
        .collect())
}

/// Outcome of one image in the `scale` command.
#[derive(Debug)]
enum ImageOutcome {
    Localized {
        estimates: Vec<ImageScale>,
        failures: Vec<(ScaleMethod, String)>,
    },
    NotLocalized(String),
}

pub fn cmd_scale(a: &ScaleArgs) -> Result<i32, CliError> {
    let config = RunConfig::new("scale", a.seed)
        .input("mesh", &a.mesh)?
        .input("camera", &a.camera)?
        .input("rig", &a.rig)?
        .input("correspondences", &a.correspondences)?
        .input("detections", &a.detections)?
        .option("method", format!("{:?}", a.method))
        .option("solver", format!("{:?}", a.solver))
        .option("refine_intrinsics", a.refine_intrinsics);
    let mesh = load_mesh(&a.mesh, None).map_err(|e| CliError::input(e.to_string()))?;
    let k = load_camera(&a.camera)?;
    let rig = LaserRig::load(&a.rig).map_err(|e| CliError::input(format!("{}: {e}", a.rig.display())))?;
    let corrs = load_correspondences(&a.correspondences)?;
    let dets = read_detections(&a.detections).map_err(|e| CliError::input(e.to_string()))?;
    let methods = select_methods(&a.method, &rig)?;
    let images = pair_images(corrs, dets)?;
    let index = MeshIndex::build(mesh);

    let outcomes: Vec<(String, ImageOutcome)> = images
        .par_iter()
        .map(|(id, corrs, dets)| {
            let est = match localize(corrs, &k, &localize_config(a.solver, a.refine_intrinsics, a.seed, id)) {
                Ok(e) => e,
                Err(e) => return (id.clone(), ImageOutcome::NotLocalized(e.to_string())),
            };
            let mut estimates = Vec::new();
            let mut failures = Vec::new();
            for &m in &methods {
                match m.estimate(&index, &est.intrinsics, &est.pose, &rig, dets) {
                    Ok(s) => estimates.push(ImageScale {
                        image_id: id.clone(),
                        estimate: s,
                        rms_px: Some(est.rms_px),
                        inliers: Some(est.inlier_ids.len()),
                    }),
                    Err(e) => failures.push((m, describe_scale_error(&e))),
                }
            }
            (id.clone(), ImageOutcome::Localized { estimates, failures })
        })
        .collect();

    let mut comments = vec![config.stamp()];
    let mut estimates = Vec::new();
    let (mut loc_failed, mut scale_failed) = (0, 0);
    for (id, outcome) in outcomes {
        match outcome {
            ImageOutcome::NotLocalized(e) => {
                loc_failed += 1;
                eprintln!("{id}: localization failed: {e}");
                comments.push(format!("failed image={id} stage=localization reason={e}"));
            }
            ImageOutcome::Localized {
                estimates: list,
                failures,
            } => {
                for (m, e) in failures {
                    scale_failed += 1;
                    eprintln!("{id}: {m} failed: {e}");
                    comments.push(format!("failed image={id} stage={m} reason={e}"));
                }
                for e in &list {
                    for (key, why) in &e.estimate.failures {
                        comments.push(format!("skipped image={id} method={} key={key} reason={why}", e.estimate.method));
                    }
                }
                estimates.extend(list);
            }
        }
    }
    let report = if estimates.is_empty() {
        ScaleReport {
            images: vec![],
            methods: vec![],
            deviations: vec![],
        }
    } else {
        aggregate_report(&estimates).map_err(|e| CliError::other(e.to_string()))?
    };
    write_report(&report, &comments, &a.out)?;
    print!("{}", format_summary(&report));
    Ok(if loc_failed > 0 {
        EXIT_LOCALIZATION
    } else if scale_failed > 0 {
        EXIT_SCALING
    } else {
        EXIT_OK
    })
}

fn describe_scale_error(e: &ScaleError) -> String {
    match e {
        ScaleError::AllBeamsFailed => "all beams failed (no usable laser spot)".into(),
        other => other.to_string(),
    }
}

fn write_report(report: &ScaleReport, comments: &[String], path: &Path) -> Result<(), CliError> {
    let mut bytes = Vec::new();
    write_report_csv(report, comments, &mut bytes).map_err(|e| CliError::other(e.to_string()))?;
    std::fs::write(path, bytes).map_err(|e| CliError::other(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Per-image table followed by the cross-image block.
pub fn format_summary(report: &ScaleReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "image         method    n  mean         std          rms_px    inliers");
    for img in &report.images {
        let _ = writeln!(
            out,
            "{:<12}  {:<8}  {:>1}  {:<11.6}  {:<11.6}  {:<8}  {}",
            img.image_id,
            img.method.name(),
            img.per_laser.len(),
            img.mean,
            img.std,
            img.rms_px.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            img.inliers.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "across images");
    let _ = writeln!(out, "method    images  mean         std          pooled_std   within_image_std");
    for m in &report.methods {
        let _ = writeln!(
            out,
            "{:<8}  {:>6}  {:<11.6}  {:<11.6}  {:<11.6}  {:.6}",
            m.method.name(),
            m.images,
            m.mean,
            m.std,
            m.pooled_std,
            m.within_image_std
        );
    }
    out
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidSpec(_) | SimError::Json { .. } => CliError::input(e.to_string()),
        other => CliError::other(other.to_string()),
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32, CliError> {
    if !a.study.is_file() {
        return Err(CliError::input(format!("study file not found: {}", a.study.display())));
    }
    let file = load_study_file(&a.study).map_err(sim_error)?;
    let manifest = run_study(&file, &a.out, a.seed).map_err(sim_error)?;
    for f in &manifest.files {
        println!("{}  {} rows  {}", f.file, f.rows, &f.sha256[..12]);
    }
    println!("config_sha256 {}", manifest.config_sha256);
    Ok(EXIT_OK)
}

pub fn cmd_report(a: &ReportArgs) -> Result<i32, CliError> {
    let mut config = RunConfig::new("report", 0);
    let mut comments = Vec::new();
    let mut estimates = Vec::new();
    for p in &a.inputs {
        config = config.input("report", p)?;
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        comments.extend(
            text.lines()
                .take_while(|l| l.starts_with('#'))
                .map(|l| format!("source={name} {}", l.trim_start_matches('#').trim())),
        );
        estimates.extend(read_report_csv(p).map_err(|e| CliError::input(e.to_string()))?);
    }
    let report = aggregate_report(&estimates).map_err(|e| CliError::input(format!("nothing to report: {e}")))?;
    print!("{}", format_summary(&report));
    if let Some(out) = &a.out {
        comments.insert(0, config.stamp());
        write_report(&report, &comments, out)?;
    }
    Ok(EXIT_OK)
}
