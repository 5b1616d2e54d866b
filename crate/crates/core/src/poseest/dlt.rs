//! Linear estimation of the full projection matrix from six or more
//! correspondences, decomposed into intrinsics and pose.

use super::{Correspondence, PoseError};
use crate::geometry::{CameraIntrinsics, CameraPose, Vec3};
use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Rotation3, Vector2};

const MIN_POINTS: usize = 6;
/// Ratio of the second-smallest to the largest singular value below which the
/// design matrix has more than a one-dimensional null space.
const RANK_TOLERANCE: f64 = 1e-10;

/// Pose and pinhole intrinsics (zero skew, no distortion) from at least six
/// non-coplanar correspondences. Pixels are used as given, so distorted
/// observations only yield an approximation.
pub fn solve_dlt(corrs: &[Correspondence]) -> Result<(CameraPose, CameraIntrinsics), PoseError> {
    if corrs.len() < MIN_POINTS {
        return Err(PoseError::InsufficientCorrespondences {
            needed: MIN_POINTS,
            got: corrs.len(),
        });
    }
    let pixels: Vec<Vector2<f64>> = corrs.iter().map(|c| Vector2::new(c.pixel.u, c.pixel.v)).collect();
    let points: Vec<Vec3> = corrs.iter().map(|c| c.point).collect();
    let (t2, t2_inv) = normalize_2d(&pixels);
    let t3 = normalize_3d(&points)?;

    let n = corrs.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (x, p)) in pixels.iter().zip(&points).enumerate() {
        let xh = t2 * nalgebra::Vector3::new(x.x, x.y, 1.0);
        let (u, v) = (xh.x / xh.z, xh.y / xh.z);
        let ph = t3 * nalgebra::Vector4::new(p.x, p.y, p.z, 1.0);
        for j in 0..4 {
            a[(2 * i, 4 + j)] = -ph[j];
            a[(2 * i, 8 + j)] = v * ph[j];
            a[(2 * i + 1, j)] = ph[j];
            a[(2 * i + 1, 8 + j)] = -u * ph[j];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(PoseError::RankDeficient)?;
    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let sigma = |k: usize| svd.singular_values[order[k]];
    if sigma(1) <= RANK_TOLERANCE * sigma(11) {
        return Err(PoseError::RankDeficient);
    }
    let h = v_t.row(order[0]).transpose();
    let p_norm = Matrix3x4::from_row_slice(h.as_slice());
    let mut p = t2_inv * p_norm * t3;
    let mut m: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
    if m.determinant() < 0.0 {
        p = -p;
        m = -m;
    }
    if m.determinant().abs() <= f64::EPSILON * m.norm().powi(3) {
        return Err(PoseError::RankDeficient);
    }
    let (mut k, r) = rq(&m);
    let lambda = k[(2, 2)];
    let t = k.try_inverse().ok_or(PoseError::RankDeficient)? * p.column(3).into_owned();
    k /= lambda;
    let rot = Rotation3::from_matrix_unchecked(r);
    let intrinsics = CameraIntrinsics::pinhole(k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)]);
    Ok((CameraPose::from_world_to_camera(rot, t), intrinsics))
}

/// `M = K·R` with `K` upper triangular (positive diagonal) and `R` a rotation.
fn rq(m: &Matrix3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let j = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let qr = (j * m).transpose().qr();
    let (q, r) = (qr.q(), qr.r());
    let mut k = j * r.transpose() * j;
    let mut rot = j * q.transpose();
    for i in 0..3 {
        if k[(i, i)] < 0.0 {
            k.column_mut(i).neg_mut();
            rot.row_mut(i).neg_mut();
        }
    }
    (k, rot)
}

/// Similarity moving the centroid to the origin with mean distance √2.
fn normalize_2d(x: &[Vector2<f64>]) -> (Matrix3<f64>, Matrix3<f64>) {
    let n = x.len() as f64;
    let c = x.iter().sum::<Vector2<f64>>() / n;
    let mean = x.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    let s = if mean > 0.0 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
    let t = Matrix3::new(s, 0.0, -s * c.x, 0.0, s, -s * c.y, 0.0, 0.0, 1.0);
    let t_inv = Matrix3::new(1.0 / s, 0.0, c.x, 0.0, 1.0 / s, c.y, 0.0, 0.0, 1.0);
    (t, t_inv)
}

/// Similarity moving the centroid to the origin with mean distance √3.
fn normalize_3d(x: &[Vec3]) -> Result<Matrix4<f64>, PoseError> {
    let n = x.len() as f64;
    let c = x.iter().sum::<Vec3>() / n;
    let mean = x.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(PoseError::RankDeficient);
    }
    let s = 3f64.sqrt() / mean;
    let mut t = Matrix4::identity() * s;
    t[(3, 3)] = 1.0;
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-s * c));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project, Pixel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pinhole_scene(seed: u64, n: usize) -> (CameraIntrinsics, CameraPose, Vec<Correspondence>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = CameraIntrinsics::pinhole(1400.0, 1380.0, 950.0, 545.0).with_image_size(1920, 1080);
        let pose = crate::poseest::testutil::random_pose(&mut rng);
        let corrs = (0..n)
            .map(|i| {
                let px = Pixel::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0));
                let nrm = k.pixel_to_normalized(&px).unwrap();
                let x = pose.camera_to_world(&(Vec3::new(nrm.x, nrm.y, 1.0) * rng.random_range(2.0..4.5)));
                Correspondence::new(i as u64, x, project(&k, &pose, &x).unwrap())
            })
            .collect();
        (k, pose, corrs)
    }

    #[test]
    fn rq_factors_reassemble() {
        let m = Matrix3::new(3.0, 1.0, 2.0, -1.0, 4.0, 0.5, 0.2, 0.3, 1.0);
        let (k, r) = rq(&m);
        assert!((k * r - m).norm() < 1e-12);
        assert!(k[(1, 0)].abs() < 1e-14 && k[(2, 0)].abs() < 1e-14 && k[(2, 1)].abs() < 1e-14);
        assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-12);
    }

    #[test]
    fn six_exact_points_recover_pose() {
        for seed in 0..20 {
            let (k, pose, corrs) = pinhole_scene(seed, 6);
            let (est, kest) = solve_dlt(&corrs).unwrap();
            let (er, et) = est.error_to(&pose);
            assert!(er < 1e-6 && et < 1e-6, "seed {seed}: {er} {et}");
            assert!((kest.fx - k.fx).abs() < 1e-4 && (kest.cy - k.cy).abs() < 1e-4);
        }
    }

    #[test]
    fn twenty_exact_points_reproject() {
        let (_, _, corrs) = pinhole_scene(99, 20);
        let (pose, k) = solve_dlt(&corrs).unwrap();
        for c in &corrs {
            let px = project(&k, &pose, &c.point).unwrap();
            assert!(px.distance(&c.pixel) <= 1e-8, "{}", px.distance(&c.pixel));
        }
    }

    #[test]
    fn coplanar_points_are_rank_deficient() {
        let k = CameraIntrinsics::pinhole(1000.0, 1000.0, 500.0, 500.0);
        let pose = CameraPose::identity();
        let corrs: Vec<_> = (0..10)
            .map(|i| {
                let x = Vec3::new((i % 4) as f64 * 0.3 - 0.4, (i / 4) as f64 * 0.25 - 0.3, 3.0);
                Correspondence::new(i, x, project(&k, &pose, &x).unwrap())
            })
            .collect();
        assert_eq!(solve_dlt(&corrs).unwrap_err(), PoseError::RankDeficient);
    }

    #[test]
    fn too_few_points() {
        let (_, _, corrs) = pinhole_scene(1, 5);
        assert!(matches!(
            solve_dlt(&corrs),
            Err(PoseError::InsufficientCorrespondences { needed: 6, got: 5 })
        ));
    }
}
