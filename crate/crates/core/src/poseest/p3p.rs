//! Minimal three-point pose solver (Grunert's quartic) with distance
//! polishing and absolute orientation.

use super::{Correspondence, PoseError};
use crate::geometry::{project, CameraIntrinsics, CameraPose, Vec3};
use nalgebra::{DMatrix, Matrix3, Rotation3};

/// Reprojection tolerance a P3P solution must meet on its own three points.
const SOLUTION_TOLERANCE_PX: f64 = 1e-6;

/// Up to four camera poses consistent with three correspondences.
pub fn solve_p3p(
    c1: &Correspondence,
    c2: &Correspondence,
    c3: &Correspondence,
    k: &CameraIntrinsics,
) -> Result<Vec<CameraPose>, PoseError> {
    let points = [c1.point, c2.point, c3.point];
    let scale = (points[1] - points[0])
        .norm()
        .max((points[2] - points[0]).norm())
        .max(f64::MIN_POSITIVE);
    let area2 = (points[1] - points[0]).cross(&(points[2] - points[0])).norm();
    if area2 <= 1e-10 * scale * scale {
        return Err(PoseError::DegenerateConfiguration(
            "the three points are collinear".into(),
        ));
    }
    let bearings = [
        k.bearing(&c1.pixel)?,
        k.bearing(&c2.pixel)?,
        k.bearing(&c3.pixel)?,
    ];
    let mut poses = Vec::with_capacity(4);
    for depths in grunert_depths(&points, &bearings) {
        let cam: Vec<Vec3> = bearings.iter().zip(depths).map(|(b, s)| b * s).collect();
        let Some((r_cw, t_cw)) = absolute_orientation(&points, &[cam[0], cam[1], cam[2]]) else {
            continue;
        };
        let pose = CameraPose::from_world_to_camera(r_cw, t_cw);
        let ok = [c1, c2, c3].iter().all(|c| {
            project(k, &pose, &c.point)
                .map(|px| px.distance(&c.pixel) <= SOLUTION_TOLERANCE_PX)
                .unwrap_or(false)
        });
        let duplicate = poses.iter().any(|p: &CameraPose| {
            let (r, t) = p.error_to(&pose);
            r < 1e-9 && t < 1e-9 * scale
        });
        if ok && !duplicate {
            poses.push(pose);
        }
    }
    Ok(poses)
}

/// Candidate depths `(s1, s2, s3)` along the three bearings.
fn grunert_depths(p: &[Vec3; 3], j: &[Vec3; 3]) -> Vec<[f64; 3]> {
    let a2 = (p[1] - p[2]).norm_squared();
    let b2 = (p[0] - p[2]).norm_squared();
    let c2 = (p[0] - p[1]).norm_squared();
    let cos_a = j[1].dot(&j[2]);
    let cos_b = j[0].dot(&j[2]);
    let cos_g = j[0].dot(&j[1]);

    let amc = (a2 - c2) / b2;
    let apc = (a2 + c2) / b2;
    let bmc = (b2 - c2) / b2;
    let bma = (b2 - a2) / b2;
    let (ca2, cb2, cg2) = (cos_a * cos_a, cos_b * cos_b, cos_g * cos_g);

    let a4 = (amc - 1.0).powi(2) - 4.0 * c2 / b2 * ca2;
    let a3 = 4.0
        * (amc * (1.0 - amc) * cos_b - (1.0 - apc) * cos_a * cos_g + 2.0 * c2 / b2 * ca2 * cos_b);
    let a2c = 2.0
        * (amc * amc - 1.0 + 2.0 * amc * amc * cb2 + 2.0 * bmc * ca2
            - 4.0 * apc * cos_a * cos_b * cos_g
            + 2.0 * bma * cg2);
    let a1 = 4.0 * (-amc * (1.0 + amc) * cos_b + 2.0 * a2 / b2 * cg2 * cos_b - (1.0 - apc) * cos_a * cos_g);
    let a0 = (1.0 + amc).powi(2) - 4.0 * a2 / b2 * cg2;

    let mut out = Vec::with_capacity(4);
    for v in real_roots(&[a0, a1, a2c, a3, a4]) {
        let d = 1.0 + v * v - 2.0 * v * cos_b;
        if !(d > 0.0) {
            continue;
        }
        let s1 = (b2 / d).sqrt();
        let s3 = v * s1;
        // s2 from the (s1, s2) constraint; the root that best fits (s2, s3)
        let disc = s1 * s1 * (cos_g * cos_g - 1.0) + c2;
        if disc < -1e-9 * c2 {
            continue;
        }
        let root = disc.max(0.0).sqrt();
        let fit = |s2: f64| (s2 * s2 + s3 * s3 - 2.0 * s2 * s3 * cos_a - a2).abs();
        let (lo, hi) = (s1 * cos_g - root, s1 * cos_g + root);
        let s2 = if fit(lo) < fit(hi) { lo } else { hi };
        let mut s = [s1, s2, s3];
        if s.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            continue;
        }
        polish_depths(&mut s, a2, b2, c2, cos_a, cos_b, cos_g);
        if s.iter().all(|x| x.is_finite() && *x > 0.0) {
            out.push(s);
        }
    }
    out
}

/// Gauss–Newton on the three law-of-cosines constraints.
fn polish_depths(s: &mut [f64; 3], a2: f64, b2: f64, c2: f64, ca: f64, cb: f64, cg: f64) {
    let residual = |s: &[f64; 3]| {
        nalgebra::Vector3::new(
            s[0] * s[0] + s[1] * s[1] - 2.0 * s[0] * s[1] * cg - c2,
            s[0] * s[0] + s[2] * s[2] - 2.0 * s[0] * s[2] * cb - b2,
            s[1] * s[1] + s[2] * s[2] - 2.0 * s[1] * s[2] * ca - a2,
        )
    };
    let mut r = residual(s);
    for _ in 0..30 {
        if r.amax() < 1e-15 * (a2 + b2 + c2) {
            break;
        }
        let j = Matrix3::new(
            2.0 * s[0] - 2.0 * s[1] * cg,
            2.0 * s[1] - 2.0 * s[0] * cg,
            0.0,
            2.0 * s[0] - 2.0 * s[2] * cb,
            0.0,
            2.0 * s[2] - 2.0 * s[0] * cb,
            0.0,
            2.0 * s[1] - 2.0 * s[2] * ca,
            2.0 * s[2] - 2.0 * s[1] * ca,
        );
        let Some(step) = j.lu().solve(&r) else { break };
        let next = [s[0] - step.x, s[1] - step.y, s[2] - step.z];
        let rn = residual(&next);
        if rn.amax() >= r.amax() {
            break;
        }
        *s = next;
        r = rn;
    }
}

/// Real roots of `Σ c[i] xⁱ` via companion-matrix eigenvalues, refined by
/// Newton iterations.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut c: Vec<f64> = coeffs.iter().map(|x| x / scale).collect();
    while c.len() > 1 && c.last().is_some_and(|x| x.abs() < 1e-12) {
        c.pop();
    }
    let degree = c.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = c[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 0..degree {
        companion[(0, i)] = -c[degree - 1 - i] / lead;
        if i + 1 < degree {
            companion[(i + 1, i)] = 1.0;
        }
    }
    let eval = |x: f64| {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &ci in c.iter().rev() {
            dp = dp * x + p;
            p = p * x + ci;
        }
        (p, dp)
    };
    let mut roots = Vec::with_capacity(degree);
    for z in companion.complex_eigenvalues().iter() {
        if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
            continue;
        }
        let mut x = z.re;
        for _ in 0..10 {
            let (p, dp) = eval(x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        if x.is_finite() {
            roots.push(x);
        }
    }
    roots
}

/// Least-squares rigid transform `(R, t)` with `dst ≈ R·src + t`
/// (Kabsch/Umeyama without scale). `None` for degenerate input.
pub fn absolute_orientation(src: &[Vec3], dst: &[Vec3]) -> Option<(Rotation3<f64>, Vec3)> {
    if src.len() != dst.len() || src.len() < 3 {
        return None;
    }
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vec3>() / n;
    let cd = dst.iter().sum::<Vec3>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let v = vt.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v * d * u.transpose();
    if !r.iter().all(|x| x.is_finite()) {
        return None;
    }
    let rot = Rotation3::from_matrix_unchecked(r);
    Some((rot, cd - rot * cs))
}
