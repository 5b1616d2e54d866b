//! PCM error against the depth difference of the two laser spots.

use super::synth::{trace_lasers, LaserStatus};
use super::{default_camera, generate_view, streams, surface_point, trial_rng, SimError, ViewSpec};
use crate::laser::{LaserPair, LaserRig};
use crate::mesh::MeshIndex;
use crate::scaling::{pcm_scale, LaserDetection};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSample {
    pub point: usize,
    pub distance: f64,
    /// Camera-frame depth of the second spot minus that of the first.
    pub depth_diff: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthStudy {
    pub samples: Vec<DepthSample>,
    /// Points skipped at each distance (view invalid, spot missed, hidden or
    /// outside the image).
    pub skipped: BTreeMap<String, usize>,
}

impl DepthStudy {
    pub fn at_distance(&self, d: f64) -> impl Iterator<Item = &DepthSample> {
        self.samples.iter().filter(move |s| s.distance == d)
    }
}

/// Samples `n_points` anchors uniformly over the horizontal square
/// `[-half_extent, half_extent]²`, places the camera on the surface normal of
/// each at every distance, and evaluates PCM on `pair` with exact spots.
pub fn depth_discrepancy_study(
    index: &MeshIndex,
    rig: &LaserRig,
    pair: &LaserPair,
    n_points: usize,
    distances: &[f64],
    half_extent: f64,
    seed: u64,
) -> Result<DepthStudy, SimError> {
    if n_points < 1 {
        return Err(SimError::InvalidSpec("n_points must be at least 1".into()));
    }
    if distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(SimError::InvalidSpec("distances must be positive".into()));
    }
    rig.beam(pair.a)?;
    rig.beam(pair.b)?;
    let k = default_camera();
    let mut rng = trial_rng(seed, &[], streams::ANCHORS);
    let anchors: Vec<(f64, f64)> = (0..n_points)
        .map(|_| (rng.random_range(-half_extent..=half_extent), rng.random_range(-half_extent..=half_extent)))
        .collect();

    let per_point: Vec<Vec<Result<DepthSample, (f64, &'static str)>>> = anchors
        .par_iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            distances
                .iter()
                .map(|&d| {
                    let anchor = surface_point(index, x, y).ok_or((d, "anchor"))?;
                    let pose = generate_view(index, &ViewSpec::new(anchor, 0.0, 0.0, d)).map_err(|_| (d, "view"))?;
                    let lasers = trace_lasers(index, &k, &pose, rig);
                    let spot = |id: u32| {
                        lasers
                            .iter()
                            .find(|l| l.beam_id == id && l.status == LaserStatus::Visible)
                            .ok_or((d, "laser"))
                    };
                    let (la, lb) = (spot(pair.a)?, spot(pair.b)?);
                    let (ha, hb) = (la.hit.unwrap(), lb.hit.unwrap());
                    let dets = [
                        LaserDetection::new(pair.a, la.pixel.unwrap()),
                        LaserDetection::new(pair.b, lb.pixel.unwrap()),
                    ];
                    let (s, _) = pcm_scale(index, &k, &pose, pair, &dets).map_err(|_| (d, "scale"))?;
                    let depth_diff = pose.world_to_camera(&hb).z - pose.world_to_camera(&ha).z;
                    Ok(DepthSample {
                        point: i,
                        distance: d,
                        depth_diff,
                        s,
                    })
                })
                .collect()
        })
        .collect();

    let mut samples = Vec::new();
    let mut skipped = BTreeMap::new();
    for r in per_point.into_iter().flatten() {
        match r {
            Ok(s) => samples.push(s),
            Err((d, why)) => *skipped.entry(format!("d={d}:{why}")).or_insert(0) += 1,
        }
    }
    Ok(DepthStudy { samples, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthBin {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Mean of `|s − 1|` over the bin.
    pub mean_abs_error: f64,
}

/// Groups samples by `|depth_diff|` into the half-open bins `[edges[i], edges[i+1])`.
pub fn bin_by_depth_difference<'a>(samples: impl IntoIterator<Item = &'a DepthSample>, edges: &[f64]) -> Vec<DepthBin> {
    let mut sums = vec![(0usize, 0.0f64); edges.len().saturating_sub(1)];
    for s in samples {
        let x = s.depth_diff.abs();
        if let Some(i) = edges.windows(2).position(|w| x >= w[0] && x < w[1]) {
            sums[i].0 += 1;
            sums[i].1 += (s.s - 1.0).abs();
        }
    }
    edges
        .windows(2)
        .zip(sums)
        .map(|(w, (n, sum))| DepthBin {
            lo: w[0],
            hi: w[1],
            n,
            mean_abs_error: if n > 0 { sum / n as f64 } else { f64::NAN },
        })
        .collect()
}
