//! Levenberg–Marquardt minimization of the reprojection error over the pose
//! (and optionally the linear intrinsics), with the 3D points held fixed.

use super::{rms_from_cost, Correspondence, PoseError, PoseEstimate};
use crate::geometry::{CameraIntrinsics, CameraPose, GeometryError, Pixel, Vec3};
use nalgebra::{DMatrix, DVector, Matrix2x3, Matrix3, Rotation3, SMatrix, Vector2};

const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub max_iterations: usize,
    /// Relative cost decrease below which the optimizer stops.
    pub cost_tolerance: f64,
    /// Also optimize fx, fy, cx, cy.
    pub refine_intrinsics: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            cost_tolerance: 1e-12,
            refine_intrinsics: false,
        }
    }
}

/// Sum of squared reprojection residuals; `None` if a point is not in front
/// of the camera.
pub fn reprojection_cost(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    pose: &CameraPose,
) -> Option<f64> {
    let mut cost = 0.0;
    for c in corrs {
        let xc = pose.world_to_camera(&c.point);
        if !(xc.z > 0.0) {
            return None;
        }
        let px = k.project_camera_point(&xc).ok()?;
        cost += (px.u - c.pixel.u).powi(2) + (px.v - c.pixel.v).powi(2);
    }
    Some(cost)
}

/// Projected pixel and its Jacobian with respect to
/// `[ω (3), δt (3), fx, fy, cx, cy]`, where the pose update is
/// `R ← exp(ω)·R`, `t ← exp(ω)·t + δt` on the world-to-camera transform.
pub fn projection_jacobian(
    k: &CameraIntrinsics,
    pose: &CameraPose,
    x: &Vec3,
) -> Result<(Pixel, SMatrix<f64, 2, 10>), GeometryError> {
    let xc = pose.world_to_camera(x);
    if !(xc.z > 0.0) {
        return Err(GeometryError::PointBehindCamera { z: xc.z });
    }
    let iz = 1.0 / xc.z;
    let n = Vector2::new(xc.x * iz, xc.y * iz);
    let r2 = n.norm_squared();
    let f = k.radial_factor(r2);
    let df = k.radial_factor_derivative(r2);
    let d = n * f;
    let pixel = Pixel::new(k.fx * d.x + k.cx, k.fy * d.y + k.cy);

    let dn_dxc = Matrix2x3::new(iz, 0.0, -xc.x * iz * iz, 0.0, iz, -xc.y * iz * iz);
    let dd_dn = nalgebra::Matrix2::identity() * f + n * (2.0 * df * n).transpose();
    let dp_dd = nalgebra::Matrix2::new(k.fx, 0.0, 0.0, k.fy);
    let dp_dxc = dp_dd * dd_dn * dn_dxc;

    let mut j = SMatrix::<f64, 2, 10>::zeros();
    j.fixed_view_mut::<2, 3>(0, 0).copy_from(&(dp_dxc * -skew(&xc)));
    j.fixed_view_mut::<2, 3>(0, 3).copy_from(&dp_dxc);
    j[(0, 6)] = d.x;
    j[(1, 7)] = d.y;
    j[(0, 8)] = 1.0;
    j[(1, 9)] = 1.0;
    Ok((pixel, j))
}

/// Applies a 6- or 10-element increment in the parameterization of
/// [`projection_jacobian`].
pub fn apply_increment(
    pose: &CameraPose,
    k: &CameraIntrinsics,
    delta: &[f64],
) -> (CameraPose, CameraIntrinsics) {
    let w = Vec3::new(delta[0], delta[1], delta[2]);
    let dt = Vec3::new(delta[3], delta[4], delta[5]);
    let exp = Rotation3::new(w);
    let r = exp * pose.world_to_camera_rotation();
    let t = exp * pose.world_to_camera_translation() + dt;
    let mut k2 = *k;
    if delta.len() >= 10 {
        k2.fx += delta[6];
        k2.fy += delta[7];
        k2.cx += delta[8];
        k2.cy += delta[9];
    }
    (CameraPose::from_world_to_camera(r, t), k2)
}

fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Minimizes `Σ‖x_j − proj(K, P, X_j)‖²` starting from `initial`.
pub fn refine_pose(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    initial: &CameraPose,
    config: &RefineConfig,
) -> Result<PoseEstimate, PoseError> {
    if corrs.len() < MIN_POINTS {
        return Err(PoseError::InsufficientCorrespondences {
            needed: MIN_POINTS,
            got: corrs.len(),
        });
    }
    let np = if config.refine_intrinsics { 10 } else { 6 };
    let initial_cost = reprojection_cost(corrs, k, initial).ok_or_else(|| {
        PoseError::DivergedOptimization("initial pose places points behind the camera".into())
    })?;
    if !initial_cost.is_finite() {
        return Err(PoseError::DivergedOptimization("non-finite initial cost".into()));
    }

    let mut pose = *initial;
    let mut kk = *k;
    let mut cost = initial_cost;
    let mut lambda = -1.0;
    let mut iterations = 0;
    let mut h = DMatrix::<f64>::zeros(np, np);
    let mut g = DVector::<f64>::zeros(np);

    'outer: while iterations < config.max_iterations && cost > 0.0 {
        iterations += 1;
        h.fill(0.0);
        g.fill(0.0);
        for c in corrs {
            let (px, j) = projection_jacobian(&kk, &pose, &c.point)?;
            let r = Vector2::new(px.u - c.pixel.u, px.v - c.pixel.v);
            let j = j.columns(0, np);
            h += j.transpose() * j;
            g += j.transpose() * r;
        }
        if lambda < 0.0 {
            lambda = 1e-3 * (0..np).map(|i| h[(i, i)]).fold(0.0, f64::max);
        }
        loop {
            let mut a = h.clone();
            for i in 0..np {
                a[(i, i)] += lambda * h[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                if lambda > 1e32 {
                    break 'outer;
                }
                continue;
            };
            let (p2, k2) = apply_increment(&pose, &kk, step.as_slice());
            match reprojection_cost(corrs, &k2, &p2) {
                Some(c2) if c2 < cost => {
                    let decrease = cost - c2;
                    pose = p2;
                    kk = k2;
                    cost = c2;
                    lambda = (lambda / 3.0).max(1e-300);
                    if decrease <= config.cost_tolerance * cost.max(f64::MIN_POSITIVE) {
                        break 'outer;
                    }
                    break;
                }
                _ => {
                    lambda *= 4.0;
                    if lambda > 1e32 {
                        break 'outer;
                    }
                }
            }
        }
    }
    if !cost.is_finite() {
        return Err(PoseError::DivergedOptimization("non-finite cost".into()));
    }
    let mut inlier_ids: Vec<u64> = corrs.iter().map(|c| c.id).collect();
    inlier_ids.sort_unstable();
    Ok(PoseEstimate {
        pose,
        intrinsics: kk,
        inlier_ids,
        rms_px: rms_from_cost(cost, corrs.len()),
        iterations,
        threshold_px: None,
        initial_cost,
        final_cost: cost,
    })
}
