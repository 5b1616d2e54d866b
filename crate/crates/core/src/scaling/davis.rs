//! Flat-scene baseline for axis-aligned parallel lasers.
//!
//! Each spot's depth follows from its image position and the known beam
//! offset. A plane fitted through the metric spots stands in for the scene,
//! and each designated pair is measured on that plane. The model-side length
//! is the distance between the ray-cast hits of the same spots.

use super::{detection, laser_hit, pair_key, LaserDetection, ScaleEntry, ScaleError, ScaleEstimate, ScaleMethod};
use crate::geometry::{CameraIntrinsics, CameraPose, Vec3};
use crate::laser::LaserRig;
use crate::mesh::MeshIndex;
use nalgebra::{Matrix3, Vector2, Vector3};

/// Largest beam tilt from the optical axis the method accepts.
pub(crate) const AXIS_TOLERANCE_RAD: f64 = 1e-6;

pub fn davis_scale(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    rig: &LaserRig,
    dets: &[LaserDetection],
) -> Result<ScaleEstimate, ScaleError> {
    for b in &rig.beams {
        if !b.is_axis_aligned(AXIS_TOLERANCE_RAD) {
            return Err(ScaleError::NotAxisAligned { beam_id: b.id });
        }
    }
    // metric spot positions in the camera frame
    let mut spots = Vec::new();
    for b in &rig.beams {
        let Ok(det) = detection(dets, b.id) else { continue };
        let n = k.pixel_to_normalized(&det.pixel)?;
        let o = Vector2::new(b.origin.x, b.origin.y);
        let n2 = n.norm_squared();
        if !(n2 > 0.0) || o.dot(&n) <= 0.0 {
            continue;
        }
        let depth = o.dot(&n) / n2;
        spots.push((b.id, n, Vec3::new(b.origin.x, b.origin.y, depth)));
    }
    if spots.len() < 3 {
        return Err(ScaleError::FlatFitDegenerate(format!(
            "need 3 spots with usable depth, got {}",
            spots.len()
        )));
    }
    // least-squares plane z = a·x + b·y + c
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (_, _, p) in &spots {
        let row = Vector3::new(p.x, p.y, 1.0);
        ata += row * row.transpose();
        atb += row * p.z;
    }
    let scale = ata.amax();
    if ata.determinant().abs() <= 1e-12 * scale.powi(3) {
        return Err(ScaleError::FlatFitDegenerate("beam origins are collinear".into()));
    }
    let coef = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| ScaleError::FlatFitDegenerate("singular plane fit".into()))?;
    let on_plane = |n: &Vector2<f64>| -> Option<Vec3> {
        let denom = 1.0 - coef.x * n.x - coef.y * n.y;
        let z = coef.z / denom;
        (z.is_finite() && z > 0.0).then(|| Vec3::new(n.x * z, n.y * z, z))
    };

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for p in &rig.pairs {
        let key = pair_key(p.a, p.b);
        let spot = |id: u32| spots.iter().find(|s| s.0 == id);
        let (Some(sa), Some(sb)) = (spot(p.a), spot(p.b)) else {
            failures.push((key, "spot depth unavailable".into()));
            continue;
        };
        let (Some(pa), Some(pb)) = (on_plane(&sa.1), on_plane(&sb.1)) else {
            failures.push((key, "viewing ray misses the fitted plane".into()));
            continue;
        };
        let m = (pa - pb).norm();
        let model = detection(dets, p.a)
            .and_then(|d| laser_hit(index, k, pose, d))
            .and_then(|xa| {
                detection(dets, p.b)
                    .and_then(|d| laser_hit(index, k, pose, d))
                    .map(|xb| (xa - xb).norm())
            });
        match model {
            Ok(m_hat) if m_hat > 0.0 => entries.push(ScaleEntry {
                key,
                s: m / m_hat,
                m,
                m_hat,
            }),
            Ok(_) => failures.push((key, ScaleError::CoincidentHits { a: p.a, b: p.b }.to_string())),
            Err(e) => failures.push((key, e.to_string())),
        }
    }
    ScaleEstimate::from_entries(ScaleMethod::Davis, entries, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{axis_angle, Pixel};
    use crate::laser::{builtin_config, RigConfig};
    use crate::scaling::{fcm_scale_all, testutil};

    #[test]
    fn perpendicular_flat_plane() {
        let index = testutil::plane(Vec3::new(0.0, 0.0, 3.0), Vec3::z(), 5.0);
        let k = testutil::camera();
        let pose = CameraPose::identity();
        let rig = builtin_config(RigConfig::A);
        let dets = testutil::detections(&index, &k, &pose, &rig);
        let est = davis_scale(&index, &k, &pose, &rig, &dets).unwrap();
        let fcm = fcm_scale_all(&index, &k, &pose, &rig, &dets).unwrap();
        assert!((est.value - fcm.value).abs() < 1e-3);
        assert!((est.value - 1.0).abs() < 1e-3);
        assert_eq!(est.entries.len(), 2);
    }

    #[test]
    fn tilted_flat_plane() {
        let k = testutil::camera();
        let rig = builtin_config(RigConfig::A);
        for axis in [Vec3::x(), Vec3::y(), Vec3::new(1.0, -1.0, 0.0)] {
            let n = axis_angle(&axis, 30f64.to_radians()) * Vec3::z();
            let index = testutil::plane(Vec3::new(0.0, 0.0, 3.0), n, 10.0);
            // a posed camera: the mesh is expressed in a different world frame
            let pose = CameraPose::from_rotation(axis_angle(&Vec3::new(0.2, 1.0, 0.1), 0.3), Vec3::new(1.0, -2.0, 0.5));
            let world = MeshIndex::build(
                crate::mesh::TriangleMesh::new(
                    index.mesh().vertices().iter().map(|v| pose.camera_to_world(v)).collect(),
                    index.mesh().triangles().to_vec(),
                )
                .unwrap(),
            );
            let dets = testutil::detections(&world, &k, &pose, &rig);
            let est = davis_scale(&world, &k, &pose, &rig, &dets).unwrap();
            assert!((est.value - 1.0).abs() < 1e-2, "{}", est.value);
        }
    }

    #[test]
    fn misaligned_rig_rejected() {
        let index = testutil::plane(Vec3::new(0.0, 0.0, 3.0), Vec3::z(), 5.0);
        let k = testutil::camera();
        let rig = builtin_config(RigConfig::C);
        let dets: Vec<_> = rig.beams.iter().map(|b| LaserDetection::new(b.id, Pixel::new(900.0, 500.0))).collect();
        assert!(matches!(
            davis_scale(&index, &k, &CameraPose::identity(), &rig, &dets),
            Err(ScaleError::NotAxisAligned { .. })
        ));
    }

    #[test]
    fn too_few_spots() {
        let index = testutil::plane(Vec3::new(0.0, 0.0, 3.0), Vec3::z(), 5.0);
        let k = testutil::camera();
        let pose = CameraPose::identity();
        let rig = builtin_config(RigConfig::A);
        let dets = testutil::detections(&index, &k, &pose, &rig);
        assert!(matches!(
            davis_scale(&index, &k, &pose, &rig, &dets[..2]),
            Err(ScaleError::FlatFitDegenerate(_))
        ));
    }
}
