//! Camera model, rigid transforms, rays and the laser reference plane.
//!
//! Conventions: right-handed frames, the camera looks down `+z` in its own
//! frame, `x` to the right and `y` down the image. A [`CameraPose`] stores the
//! camera orientation `R` (columns are the camera axes expressed in the world
//! frame) and the camera center `t`, so the world-to-camera projection is
//! `P = [Rᵀ | −Rᵀt]`.

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Maximum fixed-point iterations used when removing lens distortion.
pub const UNDISTORT_MAX_ITERATIONS: usize = 20;
/// Convergence tolerance of the undistortion, in normalized image coordinates.
pub const UNDISTORT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is behind the camera (camera-frame z = {z})")]
    PointBehindCamera { z: f64 },
    #[error("undistortion did not converge within {iterations} iterations")]
    UndistortDivergence { iterations: usize },
    #[error("rotation is not orthonormal (deviation {deviation:e})")]
    NonOrthonormalRotation { deviation: f64 },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("ray direction must be non-zero and finite")]
    DegenerateDirection,
}

/// Image coordinates in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

impl fmt::Display for Pixel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.u, self.v)
    }
}

/// Pinhole intrinsics with a three-coefficient radial distortion polynomial.
///
/// `width`/`height` are the image size in pixels; zero means unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default)]
    pub k3: f64,
    #[serde(default)]
    pub width: u32,
    #[serde(default)]
    pub height: u32,
}

impl CameraIntrinsics {
    /// Distortion-free intrinsics.
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            width: 0,
            height: 0,
        }
    }

    pub fn with_distortion(mut self, k1: f64, k2: f64, k3: f64) -> Self {
        self.k1 = k1;
        self.k2 = k2;
        self.k3 = k3;
        self
    }

    pub fn with_image_size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let all = [self.fx, self.fy, self.cx, self.cy, self.k1, self.k2, self.k3];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite parameter".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        Ok(())
    }

    pub fn has_image_size(&self) -> bool {
        self.width > 0 && self.height > 0
    }

    /// Whether `x` lies inside the image. Always true when the size is unknown.
    pub fn contains(&self, x: &Pixel) -> bool {
        if !self.has_image_size() {
            return x.is_finite();
        }
        x.u >= 0.0 && x.v >= 0.0 && x.u < self.width as f64 && x.v < self.height as f64
    }

    /// Radial factor `1 + k1 r² + k2 r⁴ + k3 r⁶` for squared radius `r2`.
    #[inline]
    pub fn radial_factor(&self, r2: f64) -> f64 {
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    /// Derivative of [`Self::radial_factor`] with respect to `r2`.
    #[inline]
    pub fn radial_factor_derivative(&self, r2: f64) -> f64 {
        self.k1 + r2 * (2.0 * self.k2 + 3.0 * self.k3 * r2)
    }

    pub fn distort(&self, normalized: Vector2<f64>) -> Vector2<f64> {
        normalized * self.radial_factor(normalized.norm_squared())
    }

    /// Inverts the radial model by fixed-point iteration.
    pub fn undistort(&self, distorted: Vector2<f64>) -> Result<Vector2<f64>, GeometryError> {
        if self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0 {
            return Ok(distorted);
        }
        let mut p = distorted;
        for _ in 0..UNDISTORT_MAX_ITERATIONS {
            let factor = self.radial_factor(p.norm_squared());
            let next = distorted / factor;
            if !next.x.is_finite() || !next.y.is_finite() {
                break;
            }
            let step = (next - p).norm();
            p = next;
            if step < UNDISTORT_TOLERANCE {
                return Ok(p);
            }
        }
        Err(GeometryError::UndistortDivergence {
            iterations: UNDISTORT_MAX_ITERATIONS,
        })
    }

    /// Maps normalized (distortion-free) coordinates to pixels.
    pub fn normalized_to_pixel(&self, normalized: Vector2<f64>) -> Pixel {
        let d = self.distort(normalized);
        Pixel::new(self.fx * d.x + self.cx, self.fy * d.y + self.cy)
    }

    /// Maps a pixel to undistorted normalized coordinates.
    pub fn pixel_to_normalized(&self, x: &Pixel) -> Result<Vector2<f64>, GeometryError> {
        let distorted = Vector2::new((x.u - self.cx) / self.fx, (x.v - self.cy) / self.fy);
        self.undistort(distorted)
    }

    /// Unit bearing vector in the camera frame for a pixel.
    pub fn bearing(&self, x: &Pixel) -> Result<Vec3, GeometryError> {
        let n = self.pixel_to_normalized(x)?;
        Ok(Vec3::new(n.x, n.y, 1.0).normalize())
    }

    /// Projects a camera-frame point.
    pub fn project_camera_point(&self, xc: &Vec3) -> Result<Pixel, GeometryError> {
        if xc.z <= 0.0 {
            return Err(GeometryError::PointBehindCamera { z: xc.z });
        }
        Ok(self.normalized_to_pixel(Vector2::new(xc.x / xc.z, xc.y / xc.z)))
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }
}

/// Rigid camera pose: orientation `R` (camera axes in world coordinates) and
/// camera center `t` in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Rotation3<f64>,
    center: Vec3,
}

/// Tolerance used when validating user-supplied rotation matrices.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation3::identity(),
            center: Vec3::zeros(),
        }
    }

    pub fn from_rotation(rotation: Rotation3<f64>, center: Vec3) -> Self {
        Self { rotation, center }
    }

    /// Builds a pose from a raw matrix, rejecting anything that is not a
    /// proper rotation within [`ORTHONORMAL_TOLERANCE`].
    pub fn from_matrix(rotation: Matrix3<f64>, center: Vec3) -> Result<Self, GeometryError> {
        let deviation = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det_dev = (rotation.determinant() - 1.0).abs();
        let worst = deviation.max(det_dev);
        if !(worst <= ORTHONORMAL_TOLERANCE) {
            return Err(GeometryError::NonOrthonormalRotation { deviation: worst });
        }
        Ok(Self {
            rotation: Rotation3::from_matrix_unchecked(rotation),
            center,
        })
    }

    /// Builds a pose from the world-to-camera transform `Xc = R_cw X + t_cw`.
    pub fn from_world_to_camera(r_cw: Rotation3<f64>, t_cw: Vec3) -> Self {
        let rotation = r_cw.inverse();
        Self {
            rotation,
            center: -(rotation * t_cw),
        }
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.rotation
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// Rotation part of the world-to-camera transform (`Rᵀ`).
    pub fn world_to_camera_rotation(&self) -> Rotation3<f64> {
        self.rotation.inverse()
    }

    /// Translation part of the world-to-camera transform (`−Rᵀt`).
    pub fn world_to_camera_translation(&self) -> Vec3 {
        -(self.rotation.inverse() * self.center)
    }

    /// `Rᵀ (X − t)`.
    pub fn world_to_camera(&self, x: &Vec3) -> Vec3 {
        self.rotation.inverse_transform_vector(&(x - self.center))
    }

    /// `R Xc + t`.
    pub fn camera_to_world(&self, xc: &Vec3) -> Vec3 {
        self.rotation * xc + self.center
    }

    pub fn camera_direction_to_world(&self, dc: &Vec3) -> Vec3 {
        self.rotation * dc
    }

    /// Optical axis `c_z` expressed in the world frame.
    pub fn optical_axis(&self) -> Vec3 {
        self.rotation * Vec3::z()
    }

    /// Same orientation, camera center multiplied by `factor`. Together with
    /// [`crate::mesh::scale_mesh`] this reproduces the monocular scale
    /// ambiguity: every image observation is unchanged.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rotation: self.rotation,
            center: self.center * factor,
        }
    }

    /// Applies a world-frame rigid motion `X ↦ q X + p` to the camera.
    pub fn transformed(&self, q: &Rotation3<f64>, p: &Vec3) -> Self {
        Self {
            rotation: q * self.rotation,
            center: q * self.center + p,
        }
    }

    /// Geodesic rotation distance and center distance to another pose.
    pub fn error_to(&self, other: &CameraPose) -> (f64, f64) {
        // ‖R₁ − R₂‖_F = 2√2·sin(θ/2) stays accurate for tiny angles
        let chord = (self.rotation.matrix() - other.rotation.matrix()).norm();
        let angle = 2.0 * (chord / (2.0 * std::f64::consts::SQRT_2)).min(1.0).asin();
        (angle, (self.center - other.center).norm())
    }

    /// Largest deviation of `RᵀR` from identity; used by property tests.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.rotation.matrix();
        let ortho = (m.transpose() * m - Matrix3::identity()).amax();
        ortho.max((m.determinant() - 1.0).abs())
    }
}

impl Default for CameraPose {
    fn default() -> Self {
        Self::identity()
    }
}

/// Serialized form of a pose: row-major camera-to-world rotation and center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotation: [[f64; 3]; 3],
    pub center: [f64; 3],
}

impl From<&CameraPose> for PoseRecord {
    fn from(p: &CameraPose) -> Self {
        let m = p.rotation.matrix();
        let mut rotation = [[0.0; 3]; 3];
        for (r, row) in rotation.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        Self {
            rotation,
            center: [p.center.x, p.center.y, p.center.z],
        }
    }
}

impl TryFrom<PoseRecord> for CameraPose {
    type Error = GeometryError;

    fn try_from(r: PoseRecord) -> Result<Self, Self::Error> {
        let m = Matrix3::from_fn(|i, j| r.rotation[i][j]);
        CameraPose::from_matrix(m, Vec3::from(r.center))
    }
}

/// Half-line with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(GeometryError::DegenerateDirection);
        }
        Ok(Self {
            origin,
            direction: direction / n,
        })
    }

    pub fn from_unit(origin: Vec3, direction: Unit<Vec3>) -> Self {
        Self {
            origin,
            direction: direction.into_inner(),
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// The plane through the optical center perpendicular to the optical axis
/// (camera-frame `z = 0`). Laser origins live on it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReferencePlane;

impl ReferencePlane {
    pub fn normal(&self) -> Vec3 {
        Vec3::z()
    }

    /// Slides the camera-frame point `p` along `direction` until it reaches
    /// the plane: `p − (p·c_z)/(v·c_z) v`. Returns `None` when `direction` is
    /// parallel to the plane.
    pub fn project_along(&self, p: &Vec3, direction: &Vec3) -> Option<Vec3> {
        let denom = direction.dot(&self.normal());
        if denom.abs() < 1e-12 {
            return None;
        }
        Some(p - direction * (p.dot(&self.normal()) / denom))
    }
}

/// Projects a world point into the image.
pub fn project(k: &CameraIntrinsics, pose: &CameraPose, x: &Vec3) -> Result<Pixel, GeometryError> {
    k.project_camera_point(&pose.world_to_camera(x))
}

/// World-frame ray from the camera center through pixel `x`.
pub fn pixel_to_ray(k: &CameraIntrinsics, pose: &CameraPose, x: &Pixel) -> Result<Ray, GeometryError> {
    let bearing = k.bearing(x)?;
    Ray::new(pose.center(), pose.camera_direction_to_world(&bearing))
}

pub fn world_to_camera(pose: &CameraPose, x: &Vec3) -> Vec3 {
    pose.world_to_camera(x)
}

pub fn camera_to_world(pose: &CameraPose, xc: &Vec3) -> Vec3 {
    pose.camera_to_world(xc)
}

/// Rotation about a unit axis by `angle` radians.
pub fn axis_angle(axis: &Vec3, angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle)
}
