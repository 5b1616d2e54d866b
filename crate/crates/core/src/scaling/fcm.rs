//! Fully calibrated method: the model point hit by a laser spot is moved back
//! along the known beam direction to the origin plane, and its offset from
//! the optical center is compared with the calibrated origin.

use super::{detection, laser_hit, LaserDetection, ScaleEntry, ScaleError, ScaleEstimate, ScaleMethod};
use crate::geometry::{CameraIntrinsics, CameraPose, Vec3};
use crate::laser::{LaserBeam, LaserRig};
use crate::mesh::MeshIndex;

/// Smallest `|v_L · c_z|` accepted.
const MIN_FORWARD_COMPONENT: f64 = 1e-9;

/// Intermediate values of one FCM evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmMeasurement {
    pub beam_id: u32,
    /// Ray-cast hit, world frame.
    pub hit: Vec3,
    /// Estimated origin on the origin plane, camera frame, model units.
    pub o_hat: Vec3,
    /// `‖O_L‖`, meters.
    pub m: f64,
    /// `‖Ô_L‖`, model units.
    pub m_hat: f64,
    pub s: f64,
}

impl FcmMeasurement {
    pub fn entry(&self) -> ScaleEntry {
        ScaleEntry {
            key: self.beam_id.to_string(),
            s: self.s,
            m: self.m,
            m_hat: self.m_hat,
        }
    }
}

pub fn fcm_scale_single(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    beam: &LaserBeam,
    det: &LaserDetection,
) -> Result<FcmMeasurement, ScaleError> {
    let m = beam.origin.norm();
    if !(m > 0.0) {
        return Err(ScaleError::DegenerateOrigin { beam_id: beam.id });
    }
    let v = beam.direction;
    if v.z.abs() < MIN_FORWARD_COMPONENT {
        return Err(ScaleError::BeamParallelToPlane { beam_id: beam.id });
    }
    let hit = laser_hit(index, k, pose, det)?;
    let xc = pose.world_to_camera(&hit);
    let o_hat = xc - v * (xc.z / v.z);
    let m_hat = o_hat.norm();
    if !(m_hat > 0.0) {
        return Err(ScaleError::DegenerateOrigin { beam_id: beam.id });
    }
    Ok(FcmMeasurement {
        beam_id: beam.id,
        hit,
        o_hat,
        m,
        m_hat,
        s: m / m_hat,
    })
}

/// FCM on every beam of the rig that has a detection; the image scale is the
/// mean over beams.
pub fn fcm_scale_all(
    index: &MeshIndex,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    rig: &LaserRig,
    dets: &[LaserDetection],
) -> Result<ScaleEstimate, ScaleError> {
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for beam in &rig.beams {
        let result = detection(dets, beam.id).and_then(|d| fcm_scale_single(index, k, pose, beam, d));
        match result {
            Ok(m) => entries.push(m.entry()),
            Err(e) => failures.push((beam.id.to_string(), e.to_string())),
        }
    }
    ScaleEstimate::from_entries(ScaleMethod::Fcm, entries, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project, CameraIntrinsics, Pixel};
    use crate::laser::{builtin_config, RigConfig};
    use crate::mesh::scale_mesh;
    use crate::scaling::testutil;

    fn plane_z3() -> MeshIndex {
        testutil::plane(Vec3::new(0.0, 0.0, 3.0), Vec3::z(), 5.0)
    }

    #[test]
    fn hand_evaluated_plane() {
        let index = plane_z3();
        let k = CameraIntrinsics::pinhole(1000.0, 1000.0, 500.0, 500.0);
        let pose = CameraPose::identity();
        let beam = LaserBeam::new(1, Vec3::new(0.1, 0.0, 0.0), Vec3::z()).unwrap();
        let det = LaserDetection::new(1, project(&k, &pose, &Vec3::new(0.1, 0.0, 3.0)).unwrap());
        let m = fcm_scale_single(&index, &k, &pose, &beam, &det).unwrap();
        assert!((m.hit - Vec3::new(0.1, 0.0, 3.0)).norm() < 1e-12);
        assert!((m.o_hat - Vec3::new(0.1, 0.0, 0.0)).norm() < 1e-12);
        assert!((m.m_hat - 0.1).abs() < 1e-12);
        assert!((m.s - 1.0).abs() < 1e-12);

        // the same images of a model twice as large
        let big = MeshIndex::build(scale_mesh(index.mesh(), 2.0).unwrap());
        let m2 = fcm_scale_single(&big, &k, &pose.scaled(2.0), &beam, &det).unwrap();
        assert!((m2.m_hat - 0.2).abs() < 1e-12);
        assert!((m2.s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn re_emitted_ray_passes_through_hit() {
        let index = testutil::plane(Vec3::new(0.2, -0.1, 3.0), Vec3::new(0.3, -0.2, -1.0), 5.0);
        let k = testutil::camera();
        let pose = CameraPose::identity();
        let beam = LaserBeam::new(2, Vec3::new(-0.12, 0.07, 0.0), Vec3::new(0.05, -0.02, 1.0)).unwrap();
        let rig = crate::laser::LaserRig::new(vec![beam], vec![]).unwrap();
        let dets = testutil::detections(&index, &k, &pose, &rig);
        let m = fcm_scale_single(&index, &k, &pose, &beam, &dets[0]).unwrap();
        let xc = pose.world_to_camera(&m.hit);
        let t = (xc - m.o_hat).dot(&beam.direction);
        assert!((m.o_hat + beam.direction * t - xc).norm() < 1e-9);
        assert!((m.s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_beams_have_zero_spread() {
        let index = plane_z3();
        let k = testutil::camera();
        let pose = CameraPose::identity();
        let rig = builtin_config(RigConfig::A);
        let dets = testutil::detections(&index, &k, &pose, &rig);
        let est = fcm_scale_all(&index, &k, &pose, &rig, &dets).unwrap();
        assert_eq!(est.entries.len(), 4);
        assert!((est.value - 1.0).abs() < 1e-9);
        assert!(est.std < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let index = plane_z3();
        let k = CameraIntrinsics::pinhole(1000.0, 1000.0, 500.0, 500.0);
        let pose = CameraPose::identity();
        let center = LaserBeam::new(1, Vec3::zeros(), Vec3::z()).unwrap();
        let det = LaserDetection::new(1, Pixel::new(500.0, 500.0));
        assert!(matches!(
            fcm_scale_single(&index, &k, &pose, &center, &det),
            Err(ScaleError::DegenerateOrigin { beam_id: 1 })
        ));
        let grazing = LaserBeam {
            id: 2,
            origin: Vec3::new(0.1, 0.0, 0.0),
            direction: Vec3::x(),
        };
        assert!(matches!(
            fcm_scale_single(&index, &k, &pose, &grazing, &det),
            Err(ScaleError::BeamParallelToPlane { beam_id: 2 })
        ));
        // a ray that leaves the plane's extent
        let beam = LaserBeam::new(3, Vec3::new(0.1, 0.0, 0.0), Vec3::z()).unwrap();
        let off = LaserDetection::new(3, Pixel::new(500.0 + 1000.0 * 3.0, 500.0));
        assert!(matches!(
            fcm_scale_single(&index, &k, &pose, &beam, &off),
            Err(ScaleError::LaserMiss { beam_id: 3 })
        ));
    }

    #[test]
    fn missing_detections_reported_as_failures() {
        let index = plane_z3();
        let k = testutil::camera();
        let pose = CameraPose::identity();
        let rig = builtin_config(RigConfig::A);
        let dets = testutil::detections(&index, &k, &pose, &rig);
        let est = fcm_scale_all(&index, &k, &pose, &rig, &dets[..3]).unwrap();
        assert_eq!(est.entries.len(), 3);
        assert_eq!(est.failures.len(), 1);
        assert!(matches!(
            fcm_scale_all(&index, &k, &pose, &rig, &[]),
            Err(ScaleError::AllBeamsFailed)
        ));
    }
}
