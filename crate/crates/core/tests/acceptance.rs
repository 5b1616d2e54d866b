//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=4,7` runs a subset.

use laserscale::geometry::{axis_angle, project, CameraIntrinsics, CameraPose, Ray, Vec3};
use laserscale::laser::{builtin_config, calibrate_rig, CalibrationObservation, LaserRig, RigConfig};
use laserscale::mesh::{scale_mesh, MeshIndex, TriangleMesh};
use laserscale::poseest::{apply_increment, localize, projection_jacobian, LocalizeConfig};
use laserscale::scaling::{mean_and_std, pcm_scale, LaserDetection};
use laserscale::simulate::{
    bin_by_depth_difference, default_camera, depth_discrepancy_study, generate_terrain, generate_view,
    run_grid_study, run_monte_carlo, run_study, surface_point, synthesize_observations, trace_lasers, view_grid,
    CellKey, GridStudySpec, LaserStatus, MonteCarloOutput, MonteCarloSpec, NoiseSpec, StudyFile, StudyMethod,
    TerrainKind, TerrainSpec, ViewSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid_spec(name: &str, rigs: Vec<RigConfig>, methods: Vec<StudyMethod>) -> GridStudySpec {
    GridStudySpec {
        name: name.into(),
        terrains: vec![TerrainKind::Smooth, TerrainKind::Rough],
        terrain_seed: 7,
        rigs,
        anchor_xy: [0.0, 0.0],
        distance_m: 3.0,
        max_angle_deg: 40.0,
        step_deg: 5.0,
        n_features: 1500,
        sigma_f: 0.0,
        sigma_l: 0.0,
        outlier_ratio: 0.0,
        methods,
        localize: true,
        seed: 1,
    }
}

/// 1. Noiseless FCM after localization is exact on every view.
fn fcm_exactness() -> Outcome {
    let spec = grid_spec("fcm", vec![RigConfig::A, RigConfig::B, RigConfig::C], vec![StudyMethod::FcmAll]);
    let rows = run_grid_study(&spec).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let (mut missing, mut hidden_spots) = (0, 0);
    for r in &rows {
        if r.s.is_none() {
            missing += 1;
        }
        // spots hidden by relief are flagged by the tracer and left out
        hidden_spots += builtin_config(r.rig).beams.len() - r.per_laser.len();
        for (_, s) in &r.per_laser {
            worst = worst.max((s - 1.0).abs());
        }
    }
    check(
        rows.len() == 2 * 3 * 289 && missing == 0 && worst <= 1e-6,
        format!(
            "{} views, {missing} without a scale, {hidden_spots} hidden spots, max per-beam |s-1| = {worst:.2e}",
            rows.len()
        ),
    )
}

/// Closed-form PCM for a plane `n·x = c` seen by an identity camera.
fn pcm_plane_oracle(rig: &LaserRig, n: Vec3, c: f64) -> f64 {
    let hit = |id| {
        let b = rig.beam(id).unwrap();
        b.origin + b.direction * ((c - n.dot(&b.origin)) / n.dot(&b.direction))
    };
    let p = &rig.pairs[0];
    let (x1, x2) = (hit(p.a), hit(p.b));
    let v12 = x2 - x1;
    let vcm = (x1 + x2) / 2.0;
    let cos_a = v12.dot(&vcm) / (v12.norm() * vcm.norm());
    p.distance_m / ((1.0 - cos_a * cos_a).sqrt() * v12.norm())
}

fn plane_index(center: Vec3, normal: Vec3, h: f64) -> MeshIndex {
    let n = normal.normalize();
    let u = n.cross(&Vec3::x()).normalize();
    let v = n.cross(&u);
    let verts = vec![
        center - u * h - v * h,
        center + u * h - v * h,
        center + u * h + v * h,
        center - u * h + v * h,
    ];
    MeshIndex::build(TriangleMesh::new(verts, vec![[0, 1, 2], [0, 2, 3]]).unwrap())
}

fn exact_detections(index: &MeshIndex, k: &CameraIntrinsics, pose: &CameraPose, rig: &LaserRig) -> Vec<LaserDetection> {
    trace_lasers(index, k, pose, rig)
        .into_iter()
        .filter(|l| l.status == LaserStatus::Visible)
        .map(|l| LaserDetection::new(l.beam_id, l.pixel.unwrap()))
        .collect()
}

/// 2. PCM against a ray–plane oracle, and its bounded error on rough terrain.
fn pcm_regime() -> Outcome {
    let rig = builtin_config(RigConfig::B);
    let k = default_camera();
    let mut oracle_err: f64 = 0.0;
    for (axis, deg) in [(Vec3::x(), 35.0), (Vec3::y(), -40.0), (Vec3::new(1.0, -2.0, 0.0), 25.0), (Vec3::y(), 0.0)] {
        let n = axis_angle(&axis, f64::to_radians(deg)) * Vec3::z();
        let center = Vec3::new(0.05, -0.1, 2.5);
        let index = plane_index(center, n, 20.0);
        let pose = CameraPose::identity();
        let dets = exact_detections(&index, &k, &pose, &rig);
        let (s, _) = pcm_scale(&index, &k, &pose, &rig.pairs[0], &dets).map_err(|e| e.to_string())?;
        oracle_err = oracle_err.max((s - pcm_plane_oracle(&rig, n, n.dot(&center))).abs());
    }

    let mut spec = grid_spec("pcm", vec![RigConfig::B], vec![StudyMethod::FcmAll, StudyMethod::Pcm]);
    spec.terrains = vec![TerrainKind::Rough];
    let rows = run_grid_study(&spec).map_err(|e| e.to_string())?;
    let extreme = |r: &&laserscale::simulate::GridRow| r.pitch.abs().max(r.roll.abs()) >= 40.0;
    let errs = |m| -> Vec<f64> {
        rows.iter()
            .filter(extreme)
            .filter(|r| r.method == m)
            .filter_map(|r| r.s.map(|s| (s - 1.0).abs()))
            .collect()
    };
    let (pcm, fcm) = (errs(StudyMethod::Pcm), errs(StudyMethod::FcmAll));
    let pcm_max = pcm.iter().cloned().fold(0.0, f64::max);
    let (pcm_mean, _) = mean_and_std(&pcm);
    let (fcm_mean, _) = mean_and_std(&fcm);
    check(
        oracle_err < 1e-9 && pcm.len() == 64 && fcm.len() == 64 && pcm_max <= 0.03 && pcm_mean > fcm_mean,
        format!(
            "oracle diff {oracle_err:.1e}; {}/{} rough 40° views: PCM max {:.3}%, mean {:.3}% vs FCM mean {:.1e}%",
            pcm.len(),
            fcm.len(),
            pcm_max * 100.0,
            pcm_mean * 100.0,
            fcm_mean * 100.0
        ),
    )
}

/// 3. Every method divides by `f` when the model is scaled by `f`.
fn scale_covariance() -> Outcome {
    let k = default_camera();
    let index = MeshIndex::build(generate_terrain(TerrainKind::Rough, 12.0, 7));
    let anchor = surface_point(&index, 0.5, -0.3).unwrap();
    let pose = generate_view(&index, &ViewSpec::new(anchor, 20.0, -10.0, 3.0)).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    for cfg in [RigConfig::A, RigConfig::B, RigConfig::C] {
        let rig = builtin_config(cfg);
        let dets = exact_detections(&index, &k, &pose, &rig);
        for m in StudyMethod::ALL.into_iter().filter(|m| m.applicable(&rig)) {
            let s0 = m.evaluate(&index, &k, &pose, &rig, &dets).map_err(|e| e.to_string())?.value;
            for f in [0.5, 2.0, 4.22] {
                let big = MeshIndex::build(scale_mesh(index.mesh(), f).unwrap());
                let s = m.evaluate(&big, &k, &pose.scaled(f), &rig, &dets).map_err(|e| e.to_string())?.value;
                worst = worst.max((s - s0 / f).abs());
                evaluated += 1;
            }
        }
    }
    check(worst < 1e-9, format!("{evaluated} method/rig/factor cases, max |s - s0/f| = {worst:.1e}"))
}

fn table_spec(repeats: usize) -> MonteCarloSpec {
    MonteCarloSpec {
        terrain: TerrainSpec::new(TerrainKind::Smooth, 7),
        anchor_xy: [0.0, 0.0],
        rig: builtin_config(RigConfig::B),
        distances: vec![2.0, 3.0, 4.0],
        angles: view_grid(15.0, 5.0),
        sigma_f: vec![0.5, 1.0],
        sigma_l: vec![0.0, 0.25, 0.5],
        outlier_ratios: vec![0.0, 0.1, 0.2],
        repeats,
        n_features: 1500,
        seed: 2024,
        methods: vec![StudyMethod::FcmAll, StudyMethod::FcmSingle, StudyMethod::Pcm],
    }
}

/// 4. Noise trends of the Monte Carlo table.
fn table_trends() -> Outcome {
    let spec = table_spec(500);
    let out = run_monte_carlo(&spec).map_err(|e| e.to_string())?;
    let cell = |d, f, l, r, method| -> &laserscale::simulate::MonteCarloCell {
        out.cell(&CellKey {
            distance: d,
            sigma_f: f,
            sigma_l: l,
            outlier_ratio: r,
            method,
        })
        .unwrap()
    };
    let mut notes = Vec::new();
    let mut ok = true;
    let failures: usize = out.cells.iter().map(|c| c.failures).sum();
    if failures > 0 {
        notes.push(format!("{failures} failed trials {:?}", out.failure_reasons));
        ok = false;
    }
    let (mut a_ok, mut b_range, mut c_ok, mut d_worst, mut e_worst) = (true, (f64::INFINITY, 0.0f64), true, 0.0f64, 0.0f64);
    for &m in &spec.methods {
        for f in 0..2 {
            for r in 0..3 {
                for l in 1..3 {
                    let stds: Vec<f64> = (0..3).map(|d| cell(d, f, l, r, m).std).collect();
                    a_ok &= stds[0] < stds[1] && stds[1] < stds[2];
                }
                for d in 0..3 {
                    let ratio = cell(d, f, 2, r, m).std / cell(d, f, 1, r, m).std;
                    b_range = (b_range.0.min(ratio), b_range.1.max(ratio));
                    for l in 1..3 {
                        if m == StudyMethod::FcmAll {
                            let all = cell(d, f, l, r, m).std;
                            c_ok &= all < cell(d, f, l, r, StudyMethod::Pcm).std;
                            c_ok &= all < cell(d, f, l, r, StudyMethod::FcmSingle).std;
                        }
                        let (s05, s10) = (cell(d, 0, l, r, m).std, cell(d, 1, l, r, m).std);
                        d_worst = d_worst.max((s10 - s05).abs() / s05);
                    }
                    for l in 0..3 {
                        let means: Vec<f64> = (0..3).map(|rr| cell(d, f, l, rr, m).mean).collect();
                        for x in &means {
                            e_worst = e_worst.max((x - means[0]).abs() / means[0]);
                        }
                    }
                }
            }
        }
    }
    let b_ok = b_range.0 >= 1.6 && b_range.1 <= 2.4;
    ok &= a_ok && b_ok && c_ok && d_worst < 0.10 && e_worst < 1e-3;
    let fcm3 = cell(1, 0, 1, 0, StudyMethod::FcmAll);
    let quiet = out
        .cells
        .iter()
        .filter(|c| c.key.sigma_l == 0)
        .map(|c| c.std)
        .fold(0.0, f64::max);
    notes.push(format!(
        "(a) std rises with d: {a_ok}; (b) ratio range [{:.2}, {:.2}]; (c) FCM-all lowest: {c_ok}; \
         (d) max sigma_f change {:.1}%; (e) max mean shift {:.4}%; FCM-all d=3 sl=0.25 std {:.4}; \
         max std with sl=0: {quiet:.1e}",
        b_range.0,
        b_range.1,
        d_worst * 100.0,
        e_worst * 100.0,
        fcm3.std
    ));
    check(ok, notes.join("; "))
}

/// 5. PCM error grows with the spot depth difference and shrinks with distance.
fn depth_law() -> Outcome {
    let terrain = TerrainSpec::new(TerrainKind::Rough, 7);
    let index = MeshIndex::build(terrain.generate());
    let rig = builtin_config(RigConfig::B);
    let distances = [2.0, 3.0, 4.0];
    let study = depth_discrepancy_study(&index, &rig, &rig.pairs[0], 3000, &distances, terrain.extent_m / 2.0 - 1.0, 11)
        .map_err(|e| e.to_string())?;
    let edges = [0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3];
    let min_count = 20;
    let mut monotone = true;
    let mut bins = Vec::new();
    for &d in &distances {
        let b = bin_by_depth_difference(study.at_distance(d), &edges);
        let used: Vec<f64> = b.iter().filter(|x| x.n >= min_count).map(|x| x.mean_abs_error).collect();
        monotone &= used.windows(2).all(|w| w[1] >= w[0]);
        bins.push(b);
    }
    let matched = bins[0]
        .iter()
        .zip(&bins[2])
        .filter(|(a, b)| a.n >= min_count && b.n >= min_count)
        .all(|(a, b)| a.mean_abs_error >= b.mean_abs_error);
    // empirical CDFs of |s - 1|, compared at every sample value
    let errs = |d: f64| {
        let mut e: Vec<f64> = study.at_distance(d).map(|s| (s.s - 1.0).abs()).collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let (e2, e4) = (errs(2.0), errs(4.0));
    let cdf = |e: &[f64], x: f64| e.partition_point(|v| *v <= x) as f64 / e.len() as f64;
    let dominates = e2.iter().chain(&e4).all(|&x| cdf(&e4, x) >= cdf(&e2, x));
    let counts: Vec<usize> = distances.iter().map(|&d| study.at_distance(d).count()).collect();
    check(
        counts.iter().all(|&c| c >= 2000) && monotone && matched && dominates,
        format!(
            "samples per distance {counts:?}; monotone bins: {monotone}; d=2 >= d=4 per bin: {matched}; \
             CDF dominance: {dominates}; median |s-1| d=2 {:.2e}, d=4 {:.2e}",
            e2[e2.len() / 2],
            e4[e4.len() / 2]
        ),
    )
}

/// 6. Flat-scene and direct baselines against FCM.
fn baseline_gap() -> Outcome {
    let mut spec = grid_spec("oblique", vec![RigConfig::A], vec![StudyMethod::FcmAll, StudyMethod::Davis]);
    spec.terrains = vec![TerrainKind::Rough];
    spec.sigma_f = 0.5;
    spec.sigma_l = 0.25;
    let rows = run_grid_study(&spec).map_err(|e| e.to_string())?;
    let err = |m| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.method == m && r.pitch.abs().max(r.roll.abs()) >= 40.0)
            .filter_map(|r| r.s.map(|s| (s - 1.0).abs()))
            .collect()
    };
    let (davis, fcm) = (err(StudyMethod::Davis), err(StudyMethod::FcmAll));
    let (davis_mean, _) = mean_and_std(&davis);
    let (fcm_mean, _) = mean_and_std(&fcm);

    // misaligned rig C, six views with laser noise
    let k = default_camera();
    let index = MeshIndex::build(generate_terrain(TerrainKind::Rough, 12.0, 7));
    let anchor = surface_point(&index, 0.0, 0.0).unwrap();
    let rig = builtin_config(RigConfig::C);
    let (mut d3_spread, mut fcm_spread) = (Vec::new(), Vec::new());
    for (i, (p, r)) in [(0.0, 0.0), (10.0, -5.0), (-15.0, 10.0), (20.0, 20.0), (-25.0, 0.0), (5.0, 30.0)]
        .into_iter()
        .enumerate()
    {
        let pose = generate_view(&index, &ViewSpec::new(anchor, p, r, 3.0)).map_err(|e| e.to_string())?;
        let noise = NoiseSpec {
            sigma_f: 0.5,
            sigma_l: 0.5,
            outlier_ratio: 0.0,
            seed: 600 + i as u64,
        };
        let obs = synthesize_observations(&index, &k, &pose, &rig, 1500, &noise).map_err(|e| e.to_string())?;
        let est = localize(&obs.correspondences, &k, &LocalizeConfig::default()).map_err(|e| e.to_string())?;
        let d3 = StudyMethod::Direct3d.evaluate(&index, &k, &est.pose, &rig, &obs.detections);
        let fcm = StudyMethod::FcmAll.evaluate(&index, &k, &est.pose, &rig, &obs.detections);
        d3_spread.push(d3.map_err(|e| e.to_string())?.std);
        fcm_spread.push(fcm.map_err(|e| e.to_string())?.std);
    }
    let (d3_mean, _) = mean_and_std(&d3_spread);
    let (fcm_sp, _) = mean_and_std(&fcm_spread);
    check(
        davis.len() == 64 && davis_mean >= 5.0 * fcm_mean && d3_mean >= 3.0 * fcm_sp,
        format!(
            "{}/{} rough 40° views: Davis mean |s-1| {:.3}% vs FCM {:.4}% ({:.0}x); rig C: Direct-3D spread {:.4} vs FCM {:.4} ({:.1}x)",
            davis.len(),
            fcm.len(),
            davis_mean * 100.0,
            fcm_mean * 100.0,
            davis_mean / fcm_mean,
            d3_mean,
            fcm_sp,
            d3_mean / fcm_sp
        ),
    )
}

/// 7. Robust localization with noise and outliers, and the refinement Jacobian.
fn pose_estimation() -> Outcome {
    let k = default_camera();
    let index = MeshIndex::build(generate_terrain(TerrainKind::Rough, 12.0, 7));
    let anchor = surface_point(&index, 0.0, 0.0).unwrap();
    let rig = builtin_config(RigConfig::A);
    let (mut worst_recovery, mut worst_rot, mut rms_range, mut cost_ok) = (1.0f64, 0.0f64, (f64::INFINITY, 0.0f64), true);
    for (i, (p, r)) in [(0.0, 0.0), (25.0, -30.0), (-40.0, 15.0), (35.0, 35.0)].into_iter().enumerate() {
        let pose = generate_view(&index, &ViewSpec::new(anchor, p, r, 3.0)).map_err(|e| e.to_string())?;
        let noise = NoiseSpec {
            sigma_f: 0.5,
            sigma_l: 0.0,
            outlier_ratio: 0.2,
            seed: 70 + i as u64,
        };
        let obs = synthesize_observations(&index, &k, &pose, &rig, 1500, &noise).map_err(|e| e.to_string())?;
        let est = localize(&obs.correspondences, &k, &LocalizeConfig::default()).map_err(|e| e.to_string())?;
        let truth_in: Vec<u64> = (0..1500u64).filter(|id| obs.truth.outlier_ids.binary_search(id).is_err()).collect();
        let found = truth_in.iter().filter(|id| est.inlier_ids.binary_search(id).is_ok()).count();
        worst_recovery = worst_recovery.min(found as f64 / truth_in.len() as f64);
        worst_rot = worst_rot.max(est.pose.error_to(&pose).0.to_degrees());
        rms_range = (rms_range.0.min(est.rms_px), rms_range.1.max(est.rms_px));
        cost_ok &= est.final_cost <= est.initial_cost;
    }

    // central differences of the projection in the increment parameterization
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_jac: f64 = 0.0;
    for _ in 0..200 {
        let pose = CameraPose::from_rotation(
            axis_angle(&Vec3::new(rng.random(), rng.random(), rng.random()), rng.random_range(-0.5..0.5)),
            Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        );
        let xc = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-0.6..0.6), rng.random_range(2.0..5.0));
        let x = pose.camera_to_world(&xc);
        let (_, j) = projection_jacobian(&k, &pose, &x).map_err(|e| e.to_string())?;
        let scale = j.amax();
        for c in 0..10 {
            let h = if c < 6 { 1e-6 } else { 1e-3 };
            let mut d = [0.0; 10];
            d[c] = h;
            let (pp, kp) = apply_increment(&pose, &k, &d);
            d[c] = -h;
            let (pm, km) = apply_increment(&pose, &k, &d);
            let (a, b) = (project(&kp, &pp, &x).unwrap(), project(&km, &pm, &x).unwrap());
            let fd = [(a.u - b.u) / (2.0 * h), (a.v - b.v) / (2.0 * h)];
            for row in 0..2 {
                worst_jac = worst_jac.max((j[(row, c)] - fd[row]).abs() / scale);
            }
        }
    }
    check(
        worst_recovery >= 0.95 && worst_rot < 0.1 && rms_range.0 >= 0.4 && rms_range.1 <= 0.6 && cost_ok && worst_jac <= 1e-6,
        format!(
            "min inlier recovery {:.1}%, max rotation error {worst_rot:.4}°, rms [{:.3}, {:.3}] px, \
             cost non-increasing: {cost_ok}, Jacobian rel. diff {worst_jac:.1e}",
            worst_recovery * 100.0,
            rms_range.0,
            rms_range.1
        ),
    )
}

/// 8. BVH ray casts agree with brute force on a large terrain.
fn raycast_oracle() -> Outcome {
    let mesh = generate_terrain(TerrainKind::Rough, 12.0, 7);
    let triangles = mesh.triangle_count();
    let index = MeshIndex::build(mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut hits, mut mismatches) = (0, 0);
    for _ in 0..10_000 {
        let o = Vec3::new(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0), rng.random_range(-1.0..4.0));
        let target = Vec3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(-0.8..0.8));
        let ray = Ray::new(o, target - o).unwrap();
        match (index.ray_cast(&ray), index.ray_cast_brute_force(&ray)) {
            (None, None) => {}
            (Some(a), Some(b)) if a.triangle_index == b.triangle_index && (a.distance - b.distance).abs() <= 1e-9 => {
                hits += 1
            }
            _ => mismatches += 1,
        }
    }
    check(
        triangles >= 50_000 && mismatches == 0,
        format!("{triangles} triangles, 10000 rays, {hits} hits, {mismatches} mismatches"),
    )
}

/// 9. Rig calibration from synthetic observations.
fn calibration() -> Outcome {
    let mut exact: f64 = 0.0;
    for cfg in [RigConfig::A, RigConfig::B, RigConfig::C] {
        let rig = builtin_config(cfg);
        let obs: Vec<CalibrationObservation> = rig
            .beams
            .iter()
            .flat_map(|b| {
                [1.0, 1.7, 2.5, 3.1, 4.0].map(|z| CalibrationObservation {
                    beam_id: b.id,
                    point: b.origin + b.direction * (z / b.direction.z),
                })
            })
            .collect();
        let fit = calibrate_rig(&obs).map_err(|e| e.to_string())?;
        for b in &rig.beams {
            let f = fit.beam(b.id).unwrap();
            exact = exact.max((f.origin - b.origin).norm()).max((f.direction - b.direction).norm());
        }
    }
    let rig = builtin_config(RigConfig::C);
    let noise = Normal::new(0.0, 0.001).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs: Vec<CalibrationObservation> = rig
            .beams
            .iter()
            .flat_map(|b| {
                (0..20)
                    .map(|i| {
                        let z = 1.0 + 4.0 * i as f64 / 19.0;
                        let p = b.origin + b.direction * (z / b.direction.z);
                        let e = Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                        CalibrationObservation {
                            beam_id: b.id,
                            point: p + e,
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let fit = calibrate_rig(&obs).map_err(|e| e.to_string())?;
        for b in &rig.beams {
            worst = worst.max((fit.beam(b.id).unwrap().origin - b.origin).norm());
        }
    }
    check(
        exact <= 1e-10 && worst < 0.003,
        format!("noiseless error {exact:.1e}; worst origin error with 1 mm noise over 500 seeds {:.2} mm", worst * 1e3),
    )
}

/// 10. Studies give identical bytes for any worker count.
fn determinism() -> Outcome {
    let file: StudyFile = serde_json::from_str(
        r#"{"studies":[
            {"kind":"grid","name":"g","terrains":["rough"],"rigs":["B"],"max_angle_deg":20,"n_features":200,
             "sigma_f":0.5,"sigma_l":0.25,"outlier_ratio":0.1},
            {"kind":"noise","name":"n","distances":[2,4],"sigma_f":[0.5],"sigma_l":[0.25],"outlier_ratios":[0.2],
             "repeats":12,"n_features":300},
            {"kind":"depth","name":"d","n_points":200}
        ]}"#,
    )
    .map_err(|e| e.to_string())?;
    let run = |threads: usize| -> Result<Vec<(String, Vec<u8>)>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let manifest = pool.install(|| run_study(&file, dir.path(), Some(42))).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for f in manifest.files.iter().map(|f| f.file.clone()).chain(["manifest.json".to_string()]) {
            files.push((f.clone(), std::fs::read(dir.path().join(&f)).map_err(|e| e.to_string())?));
        }
        Ok(files)
    };
    let a = run(1)?;
    let b = run(4)?;
    let c = run(4)?;
    let mc = |t: usize| -> Result<MonteCarloOutput, String> {
        let mut spec = table_spec(4);
        spec.distances = vec![3.0];
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| run_monte_carlo(&spec))
            .map_err(|e| e.to_string())
    };
    let same_mc = mc(1)? == mc(3)?;
    check(
        a == b && b == c && same_mc,
        format!("{} study files identical across 1/4/4 workers: {}; Monte Carlo tables identical: {same_mc}", a.len(), a == b && b == c),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 10] = [
        ("FCM exactness on the 289-view grid", fcm_exactness),
        ("PCM approximation regime", pcm_regime),
        ("scale covariance", scale_covariance),
        ("Monte Carlo noise trends", table_trends),
        ("depth-discrepancy law", depth_law),
        ("baseline gap", baseline_gap),
        ("pose estimation", pose_estimation),
        ("ray-cast oracle", raycast_oracle),
        ("rig calibration", calibration),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {n:>2} {name} ({secs:.1} s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {n:>2} {name} ({secs:.1} s): {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
