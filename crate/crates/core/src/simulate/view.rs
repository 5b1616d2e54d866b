//! Camera placement relative to a surface point.

use super::SimError;
use crate::geometry::{axis_angle, CameraPose, Ray, Vec3};
use crate::mesh::MeshIndex;
use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

/// Radius of the neighborhood averaged for the surface normal, meters.
pub const NORMAL_RADIUS_M: f64 = 0.5;
pub const MAX_VIEW_ANGLE_DEG: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub anchor: Vec3,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub distance_m: f64,
}

impl ViewSpec {
    pub fn new(anchor: Vec3, pitch_deg: f64, roll_deg: f64, distance_m: f64) -> Self {
        Self {
            anchor,
            pitch_deg,
            roll_deg,
            distance_m,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok_angle = |a: f64| a.is_finite() && a.abs() <= MAX_VIEW_ANGLE_DEG + 1e-9;
        if !ok_angle(self.pitch_deg) || !ok_angle(self.roll_deg) {
            return Err(SimError::InvalidSpec(format!(
                "pitch/roll must lie in [-{MAX_VIEW_ANGLE_DEG}, {MAX_VIEW_ANGLE_DEG}] degrees"
            )));
        }
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(SimError::InvalidSpec("distance must be positive".into()));
        }
        if !self.anchor.iter().all(|c| c.is_finite()) {
            return Err(SimError::InvalidSpec("anchor must be finite".into()));
        }
        Ok(())
    }
}

/// All `(pitch, roll)` combinations from `-max` to `max` in `step` degrees.
pub fn view_grid(max_deg: f64, step_deg: f64) -> Vec<(f64, f64)> {
    let n = (max_deg / step_deg).round() as i64;
    let angles: Vec<f64> = (-n..=n).map(|i| i as f64 * step_deg).collect();
    let mut out = Vec::with_capacity(angles.len() * angles.len());
    for &p in &angles {
        for &r in &angles {
            out.push((p, r));
        }
    }
    out
}

/// Point where a vertical ray meets the surface above or below `(x, y)`.
pub fn surface_point(index: &MeshIndex, x: f64, y: f64) -> Option<Vec3> {
    let b = index.mesh().bounds();
    let top = b.max.z + 1.0 + (b.max.z - b.min.z).abs();
    let ray = Ray::new(Vec3::new(x, y, top), -Vec3::z()).ok()?;
    index.ray_cast(&ray).map(|h| h.point)
}

/// Camera frame looking down `-normal`, with its `x` axis as close as
/// possible to world `x`.
fn base_frame(normal: &Vec3) -> Matrix3<f64> {
    let z = -normal.normalize();
    let seed = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let x = (seed - z * seed.dot(&z)).normalize();
    let y = z.cross(&x);
    Matrix3::from_columns(&[x, y, z])
}

/// Camera at distance `d` from the anchor. At zero pitch and roll the
/// optical axis runs along the smoothed surface normal; pitch tilts it about
/// the camera `x` axis and roll then about the camera `y` axis, both pivoting
/// about the anchor.
pub fn generate_view(index: &MeshIndex, spec: &ViewSpec) -> Result<CameraPose, SimError> {
    spec.validate()?;
    let normal = index
        .local_normal(&spec.anchor, NORMAL_RADIUS_M, &Vec3::z())
        .ok_or(SimError::AnchorOffSurface)?;
    let b = base_frame(&normal);
    let r = b
        * axis_angle(&Vec3::x(), spec.pitch_deg.to_radians()).matrix()
        * axis_angle(&Vec3::y(), spec.roll_deg.to_radians()).matrix();
    let rotation = Rotation3::from_matrix_unchecked(r);
    let axis = rotation * Vec3::z();
    let center = spec.anchor - axis * spec.distance_m;
    let pose = CameraPose::from_rotation(rotation, center);

    // a camera below the heightfield sees the surface from behind
    let up = Ray::new(center, Vec3::z()).map_err(|_| SimError::CameraInsideMesh)?;
    if index.ray_cast(&up).is_some() {
        return Err(SimError::CameraInsideMesh);
    }
    let principal = Ray::new(center, axis).map_err(|_| SimError::CameraInsideMesh)?;
    match index.ray_cast(&principal) {
        Some(hit) if hit.distance >= spec.distance_m * (1.0 - 1e-9) - 1e-9 => Ok(pose),
        Some(_) => Err(SimError::ViewOccluded),
        None => Err(SimError::AnchorOffSurface),
    }
}
