//! Random sampling consensus over minimal pose hypotheses, with an
//! a-contrario threshold that minimizes the number of false alarms.

use super::refine::{refine_pose, reprojection_cost, RefineConfig};
use super::{dlt::solve_dlt, p3p::solve_p3p, rms_from_cost, Correspondence, PoseError, PoseEstimate};
use crate::geometry::{CameraIntrinsics, CameraPose};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Hypothesis generator used inside the sampling loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinimalSolver {
    /// Three points plus one verification point.
    P3p,
    /// Six points, linear.
    Dlt,
}

impl MinimalSolver {
    fn sample_size(self) -> usize {
        match self {
            MinimalSolver::P3p => 4,
            MinimalSolver::Dlt => 6,
        }
    }

    /// Points that determine the model (the verification point is excluded).
    fn model_size(self) -> usize {
        match self {
            MinimalSolver::P3p => 3,
            MinimalSolver::Dlt => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Threshold chosen per hypothesis by minimizing the NFA, capped at
    /// `max_px`. Falls back to `fallback_px` when no hypothesis is meaningful.
    Adaptive { max_px: f64, fallback_px: f64 },
    Fixed { px: f64 },
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Adaptive {
            max_px: 16.0,
            fallback_px: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub seed: u64,
    pub solver: MinimalSolver,
    pub threshold: ThresholdMode,
    pub min_iterations: usize,
    pub max_iterations: usize,
    /// Probability of drawing at least one all-inlier sample, used for the
    /// adaptive iteration count.
    pub confidence: f64,
    pub min_inliers: usize,
    /// Refine the winning hypothesis on its inliers before returning, then
    /// re-select inliers with the same threshold.
    pub polish: bool,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            solver: MinimalSolver::P3p,
            threshold: ThresholdMode::default(),
            min_iterations: 50,
            max_iterations: 2000,
            confidence: 0.9999,
            min_inliers: 6,
            polish: true,
        }
    }
}

/// `log10` of the binomial coefficient via the log-gamma table.
struct LogCombi {
    log_fact: Vec<f64>,
}

impl LogCombi {
    fn new(n: usize) -> Self {
        let mut log_fact = vec![0.0; n + 1];
        for i in 1..=n {
            log_fact[i] = log_fact[i - 1] + (i as f64).log10();
        }
        Self { log_fact }
    }

    fn choose(&self, n: usize, k: usize) -> f64 {
        self.log_fact[n] - self.log_fact[k] - self.log_fact[n - k]
    }
}

/// Best `(log10 NFA, k, threshold)` for sorted residuals `errs`.
fn best_nfa(
    errs: &[f64],
    s: usize,
    log_area: f64,
    max_px: f64,
    combi: &LogCombi,
) -> Option<(f64, usize, f64)> {
    let n = errs.len();
    if n <= s {
        return None;
    }
    let log_models = ((n - s) as f64).log10();
    let mut best: Option<(f64, usize, f64)> = None;
    for k in (s + 1)..=n {
        let e = errs[k - 1];
        if !(e <= max_px) {
            break;
        }
        let log_alpha = (std::f64::consts::PI.log10() - log_area + 2.0 * e.max(1e-150).log10()).min(0.0);
        let nfa = log_models + combi.choose(n, k) + combi.choose(k, s) + (k - s) as f64 * log_alpha;
        if best.is_none_or(|b| nfa < b.0) {
            best = Some((nfa, k, e));
        }
    }
    best
}

fn residuals(corrs: &[Correspondence], k: &CameraIntrinsics, pose: &CameraPose, out: &mut Vec<f64>) {
    out.clear();
    out.extend(corrs.iter().map(|c| {
        let xc = pose.world_to_camera(&c.point);
        if !(xc.z > 0.0) {
            return f64::INFINITY;
        }
        k.project_camera_point(&xc)
            .map(|px| px.distance(&c.pixel))
            .unwrap_or(f64::INFINITY)
    }));
}

/// Image area used for the background probability: the declared image size,
/// or the bounding box of the observations.
fn log_image_area(corrs: &[Correspondence], k: &CameraIntrinsics) -> f64 {
    if k.has_image_size() {
        return (k.width as f64 * k.height as f64).log10();
    }
    let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in corrs {
        u0 = u0.min(c.pixel.u);
        u1 = u1.max(c.pixel.u);
        v0 = v0.min(c.pixel.v);
        v1 = v1.max(c.pixel.v);
    }
    ((u1 - u0).max(1.0) * (v1 - v0).max(1.0)).log10()
}

struct Hypothesis {
    pose: CameraPose,
    score: f64,
    inliers: usize,
    threshold: f64,
}

/// Robust pose from correspondences that may contain outliers.
pub fn robust_estimate(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    config: &RansacConfig,
) -> Result<PoseEstimate, PoseError> {
    let s = config.solver.sample_size();
    let needed = s.max(4);
    if corrs.len() < needed {
        return Err(PoseError::InsufficientCorrespondences {
            needed,
            got: corrs.len(),
        });
    }
    let n = corrs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let combi = LogCombi::new(n);
    let log_area = log_image_area(corrs, k);
    let model_size = config.solver.model_size();

    let mut best_nfa_hyp: Option<Hypothesis> = None;
    let mut best_count_hyp: Option<Hypothesis> = None;
    let fixed_px = match config.threshold {
        ThresholdMode::Adaptive { fallback_px, .. } => fallback_px,
        ThresholdMode::Fixed { px } => px,
    };
    let mut errs = Vec::with_capacity(n);
    let mut sorted = Vec::with_capacity(n);
    let mut budget = config.max_iterations;
    let mut iterations = 0;

    while iterations < budget.max(config.min_iterations).min(config.max_iterations) {
        iterations += 1;
        let idx = sample(&mut rng, n, s);
        let pose = match hypothesis(corrs, &idx.into_vec(), k, config.solver) {
            Some(p) => p,
            None => continue,
        };
        residuals(corrs, k, &pose, &mut errs);
        let count = errs.iter().filter(|&&e| e <= fixed_px).count();
        if best_count_hyp.as_ref().is_none_or(|b| count > b.inliers) {
            best_count_hyp = Some(Hypothesis {
                pose,
                score: -(count as f64),
                inliers: count,
                threshold: fixed_px,
            });
        }
        let support = if let ThresholdMode::Adaptive { max_px, .. } = config.threshold {
            sorted.clear();
            sorted.extend_from_slice(&errs);
            sorted.sort_unstable_by(f64::total_cmp);
            match best_nfa(&sorted, model_size, log_area, max_px, &combi) {
                Some((nfa, kk, thr)) if nfa < 0.0 => {
                    if best_nfa_hyp.as_ref().is_none_or(|b| nfa < b.score) {
                        best_nfa_hyp = Some(Hypothesis {
                            pose,
                            score: nfa,
                            inliers: kk,
                            threshold: thr,
                        });
                    }
                    best_nfa_hyp.as_ref().map_or(0, |b| b.inliers)
                }
                _ => best_count_hyp.as_ref().map_or(0, |b| b.inliers),
            }
        } else {
            best_count_hyp.as_ref().map_or(0, |b| b.inliers)
        };
        budget = adaptive_budget(support, n, s, config.confidence).min(budget);
    }

    let best = best_nfa_hyp.or(best_count_hyp).ok_or(PoseError::NoConsensus {
        inliers: 0,
        needed: config.min_inliers,
    })?;
    let mut pose = best.pose;
    let mut inliers = select_inliers(corrs, k, &pose, best.threshold, &mut errs);
    if config.polish && inliers.len() >= config.min_inliers {
        if let Ok(est) = refine_pose(&inliers, k, &pose, &RefineConfig::default()) {
            let polished = select_inliers(corrs, k, &est.pose, best.threshold, &mut errs);
            if polished.len() >= inliers.len() {
                pose = est.pose;
                inliers = polished;
            }
        }
    }
    if inliers.len() < config.min_inliers {
        return Err(PoseError::NoConsensus {
            inliers: inliers.len(),
            needed: config.min_inliers,
        });
    }
    let cost = reprojection_cost(&inliers, k, &pose).unwrap_or(f64::INFINITY);
    let mut inlier_ids: Vec<u64> = inliers.iter().map(|c| c.id).collect();
    inlier_ids.sort_unstable();
    Ok(PoseEstimate {
        pose,
        intrinsics: *k,
        inlier_ids,
        rms_px: rms_from_cost(cost, inliers.len()),
        iterations,
        threshold_px: Some(best.threshold),
        initial_cost: cost,
        final_cost: cost,
    })
}

fn select_inliers(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    pose: &CameraPose,
    threshold: f64,
    errs: &mut Vec<f64>,
) -> Vec<Correspondence> {
    residuals(corrs, k, pose, errs);
    corrs
        .iter()
        .zip(errs.iter())
        .filter(|(_, &e)| e <= threshold)
        .map(|(c, _)| *c)
        .collect()
}

/// Iterations needed to draw an all-inlier sample with probability
/// `confidence` given `support` inliers among `n`.
fn adaptive_budget(support: usize, n: usize, s: usize, confidence: f64) -> usize {
    let w = support as f64 / n as f64;
    let ws = w.powi(s as i32);
    if ws <= 0.0 {
        return usize::MAX;
    }
    if ws >= 1.0 {
        return 1;
    }
    let it = (1.0 - confidence).ln() / (1.0 - ws).ln();
    if it.is_finite() && it >= 0.0 {
        it.ceil() as usize
    } else {
        usize::MAX
    }
}

fn hypothesis(
    corrs: &[Correspondence],
    idx: &[usize],
    k: &CameraIntrinsics,
    solver: MinimalSolver,
) -> Option<CameraPose> {
    match solver {
        MinimalSolver::P3p => {
            let sols = solve_p3p(&corrs[idx[0]], &corrs[idx[1]], &corrs[idx[2]], k).ok()?;
            let check = &corrs[idx[3]];
            sols.into_iter()
                .filter_map(|p| {
                    let xc = p.world_to_camera(&check.point);
                    if !(xc.z > 0.0) {
                        return None;
                    }
                    let e = k.project_camera_point(&xc).ok()?.distance(&check.pixel);
                    Some((e, p))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, p)| p)
        }
        MinimalSolver::Dlt => {
            let sample: Vec<Correspondence> = idx.iter().map(|&i| corrs[i]).collect();
            solve_dlt(&sample).ok().map(|(p, _)| p)
        }
    }
}
