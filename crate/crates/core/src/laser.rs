//! Laser rig: beams with origins on the camera's `z = 0` plane and unit
//! directions in the camera frame, named pairs, built-in fixtures and
//! line-fit calibration.

use crate::geometry::Vec3;
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Minimum depth range a beam's calibration points must cover, in meters.
pub const MIN_DEPTH_SPAN_M: f64 = 0.1;
/// Angle above which two beams are not treated as parallel by the
/// parallel-pair method.
pub const PARALLEL_TOLERANCE_RAD: f64 = 1e-3;

/// Fixed seed for the per-beam direction perturbations of configuration C.
const CONFIG_C_SEED: u64 = 0x1a5e_c0de;

#[derive(Debug, Error)]
pub enum LaserError {
    #[error("beam {beam_id}: need at least 2 calibration observations, got {got}")]
    InsufficientObservations { beam_id: u32, got: usize },
    #[error("beam {beam_id}: calibration depth span {span_m:.4} m is below {min_m} m")]
    IllConditionedFit { beam_id: u32, span_m: f64, min_m: f64 },
    #[error("unknown beam id {0}")]
    UnknownBeam(u32),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserBeam {
    pub id: u32,
    /// Camera frame, meters, `z = 0`.
    pub origin: Vec3,
    /// Camera frame, unit length, pointing forward (`z > 0`).
    pub direction: Vec3,
}

impl LaserBeam {
    /// Normalizes the direction. The origin must already lie on `z = 0`.
    pub fn new(id: u32, origin: Vec3, direction: Vec3) -> Result<Self, LaserError> {
        let norm = direction.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(LaserError::InvalidRig(format!("beam {id}: zero direction")));
        }
        let direction = direction / norm;
        if !(direction.z > 0.0) {
            return Err(LaserError::InvalidRig(format!(
                "beam {id}: direction must point forward (z > 0)"
            )));
        }
        if origin.z.abs() > 1e-12 || !origin.iter().all(|c| c.is_finite()) {
            return Err(LaserError::InvalidRig(format!(
                "beam {id}: origin must be finite and lie on z = 0"
            )));
        }
        Ok(Self {
            id,
            origin: Vec3::new(origin.x, origin.y, 0.0),
            direction,
        })
    }

    pub fn point_at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    /// Whether the beam runs along the optical axis.
    pub fn is_axis_aligned(&self, tolerance_rad: f64) -> bool {
        angle_between(&self.direction, &Vec3::z()) <= tolerance_rad
    }
}

/// A pair of beams with a known metric separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserPair {
    pub a: u32,
    pub b: u32,
    pub distance_m: f64,
}

/// Line-fit diagnostics kept with a calibrated rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamFit {
    pub id: u32,
    pub observations: usize,
    pub depth_span_m: f64,
    /// RMS orthogonal distance of the observations to the fitted line.
    pub rms_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserRig {
    pub beams: Vec<LaserBeam>,
    #[serde(default)]
    pub pairs: Vec<LaserPair>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calibration: Vec<BeamFit>,
}

impl LaserRig {
    pub fn new(beams: Vec<LaserBeam>, pairs: Vec<LaserPair>) -> Result<Self, LaserError> {
        let rig = Self {
            beams,
            pairs,
            calibration: Vec::new(),
        };
        rig.validate()?;
        Ok(rig)
    }

    pub fn validate(&self) -> Result<(), LaserError> {
        if self.beams.is_empty() {
            return Err(LaserError::InvalidRig("no beams".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.beams {
            if !seen.insert(b.id) {
                return Err(LaserError::InvalidRig(format!("duplicate beam id {}", b.id)));
            }
            LaserBeam::new(b.id, b.origin, b.direction)?;
            if (b.direction.norm() - 1.0).abs() > 1e-12 {
                return Err(LaserError::InvalidRig(format!("beam {}: direction is not unit", b.id)));
            }
        }
        for p in &self.pairs {
            if p.a == p.b {
                return Err(LaserError::InvalidRig(format!("pair ({}, {}) repeats a beam", p.a, p.b)));
            }
            for id in [p.a, p.b] {
                if !seen.contains(&id) {
                    return Err(LaserError::UnknownBeam(id));
                }
            }
            if !(p.distance_m > 0.0 && p.distance_m.is_finite()) {
                return Err(LaserError::InvalidRig(format!(
                    "pair ({}, {}): distance must be positive",
                    p.a, p.b
                )));
            }
        }
        Ok(())
    }

    pub fn beam(&self, id: u32) -> Result<&LaserBeam, LaserError> {
        self.beams
            .iter()
            .find(|b| b.id == id)
            .ok_or(LaserError::UnknownBeam(id))
    }

    pub fn beam_ids(&self) -> Vec<u32> {
        self.beams.iter().map(|b| b.id).collect()
    }

    /// Adds a pair whose distance is the perpendicular separation of the two
    /// beams (using their mean direction).
    pub fn with_perpendicular_pair(mut self, a: u32, b: u32) -> Result<Self, LaserError> {
        let d = perpendicular_distance(self.beam(a)?, self.beam(b)?);
        self.pairs.push(LaserPair { a, b, distance_m: d });
        self.validate()?;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self, LaserError> {
        let text = std::fs::read_to_string(path)?;
        let rig: LaserRig = serde_json::from_str(&text).map_err(|e| LaserError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        // normalize directions that were written with limited precision
        let beams = rig
            .beams
            .iter()
            .map(|b| LaserBeam::new(b.id, b.origin, b.direction))
            .collect::<Result<Vec<_>, _>>()?;
        let rig = LaserRig { beams, ..rig };
        rig.validate()?;
        Ok(rig)
    }

    pub fn save(&self, path: &Path) -> Result<(), LaserError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| LaserError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Angle between two directions in `[0, π]`.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Angle between the directions of two beams of a rig.
pub fn check_parallel(rig: &LaserRig, a: u32, b: u32) -> Result<f64, LaserError> {
    Ok(angle_between(&rig.beam(a)?.direction, &rig.beam(b)?.direction))
}

/// Distance between the two beam lines measured perpendicular to their mean
/// direction. For parallel beams this is the usual line-to-line distance.
pub fn perpendicular_distance(a: &LaserBeam, b: &LaserBeam) -> f64 {
    let v = (a.direction + b.direction).normalize();
    (b.origin - a.origin).cross(&v).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RigConfig {
    A,
    B,
    C,
}

impl std::str::FromStr for RigConfig {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(RigConfig::A),
            "B" => Ok(RigConfig::B),
            "C" => Ok(RigConfig::C),
            other => Err(format!("unknown rig configuration {other:?} (expected A, B or C)")),
        }
    }
}

/// Deterministic rig fixtures.
///
/// * A: four beams along the optical axis, 10 cm from the camera center.
/// * B: two parallel beams 10 cm apart, mounted 15 cm below the camera
///   center and tilted 5° away from the optical axis, in the plane
///   perpendicular to their baseline.
/// * C: four beams on a 16.5 cm circle, rotated 7° about the optical axis,
///   each direction tilted by up to 2°.
pub fn builtin_config(which: RigConfig) -> LaserRig {
    let beams_pairs = match which {
        RigConfig::A => {
            let z = Vec3::z();
            let beams = vec![
                LaserBeam::new(1, Vec3::new(0.1, 0.0, 0.0), z),
                LaserBeam::new(2, Vec3::new(-0.1, 0.0, 0.0), z),
                LaserBeam::new(3, Vec3::new(0.0, 0.1, 0.0), z),
                LaserBeam::new(4, Vec3::new(0.0, -0.1, 0.0), z),
            ];
            let pairs = vec![
                LaserPair { a: 1, b: 2, distance_m: 0.2 },
                LaserPair { a: 3, b: 4, distance_m: 0.2 },
            ];
            (beams, pairs)
        }
        RigConfig::B => {
            let tilt = 5f64.to_radians();
            let v = Vec3::new(0.0, tilt.sin(), tilt.cos());
            let beams = vec![
                LaserBeam::new(1, Vec3::new(-0.05, 0.15, 0.0), v),
                LaserBeam::new(2, Vec3::new(0.05, 0.15, 0.0), v),
            ];
            (beams, vec![LaserPair { a: 1, b: 2, distance_m: 0.10 }])
        }
        RigConfig::C => {
            let mut rng = ChaCha8Rng::seed_from_u64(CONFIG_C_SEED);
            let radius = 0.165;
            let beams: Vec<_> = (0..4)
                .map(|k| {
                    let phi = (k as f64 * 90.0 + 7.0).to_radians();
                    let tilt = rng.random_range(0.0..=2f64.to_radians());
                    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
                    let v = Vec3::new(
                        tilt.sin() * azimuth.cos(),
                        tilt.sin() * azimuth.sin(),
                        tilt.cos(),
                    );
                    LaserBeam::new(k + 1, Vec3::new(radius * phi.cos(), radius * phi.sin(), 0.0), v)
                })
                .collect();
            let side = radius * std::f64::consts::SQRT_2;
            let pairs = [(1, 2), (2, 3), (3, 4), (4, 1)]
                .map(|(a, b)| LaserPair { a, b, distance_m: side })
                .to_vec();
            (beams, pairs)
        }
    };
    let (beams, pairs) = beams_pairs;
    let beams = beams
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .expect("built-in beams are valid");
    LaserRig::new(beams, pairs).expect("built-in rig is valid")
}

/// A beam–surface intersection measured in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationObservation {
    pub beam_id: u32,
    pub point: Vec3,
}

#[derive(Deserialize)]
struct ObservationRow {
    beam_id: u32,
    x: f64,
    y: f64,
    z: f64,
}

/// Reads `beam_id,x,y,z` rows.
pub fn read_calibration_observations(path: &Path) -> Result<Vec<CalibrationObservation>, LaserError> {
    let parse_err = |message: String| LaserError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<ObservationRow>().enumerate() {
        let row = row.map_err(|e| parse_err(format!("row {}: {e}", i + 1)))?;
        if !(row.z > 0.0) {
            return Err(parse_err(format!("row {}: point must have z > 0", i + 1)));
        }
        out.push(CalibrationObservation {
            beam_id: row.beam_id,
            point: Vec3::new(row.x, row.y, row.z),
        });
    }
    Ok(out)
}

/// Total-least-squares line per beam; the origin is the line's intersection
/// with `z = 0`. The returned rig has no pairs.
pub fn calibrate_rig(obs: &[CalibrationObservation]) -> Result<LaserRig, LaserError> {
    let mut groups: BTreeMap<u32, Vec<Vec3>> = BTreeMap::new();
    for o in obs {
        groups.entry(o.beam_id).or_default().push(o.point);
    }
    if groups.is_empty() {
        return Err(LaserError::InsufficientObservations { beam_id: 0, got: 0 });
    }
    let mut beams = Vec::with_capacity(groups.len());
    let mut fits = Vec::with_capacity(groups.len());
    for (id, pts) in groups {
        let (beam, fit) = fit_beam(id, &pts)?;
        beams.push(beam);
        fits.push(fit);
    }
    let mut rig = LaserRig::new(beams, Vec::new())?;
    rig.calibration = fits;
    Ok(rig)
}

fn fit_beam(id: u32, pts: &[Vec3]) -> Result<(LaserBeam, BeamFit), LaserError> {
    if pts.len() < 2 {
        return Err(LaserError::InsufficientObservations {
            beam_id: id,
            got: pts.len(),
        });
    }
    let (zmin, zmax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.z), b.max(p.z)));
    let span = zmax - zmin;
    if !(span >= MIN_DEPTH_SPAN_M) {
        return Err(LaserError::IllConditionedFit {
            beam_id: id,
            span_m: span,
            min_m: MIN_DEPTH_SPAN_M,
        });
    }
    let n = pts.len() as f64;
    let c = pts.iter().sum::<Vec3>() / n;
    let mut scatter = Matrix3::zeros();
    for p in pts {
        let d = p - c;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let imax = eig.eigenvalues.imax();
    let mut v: Vec3 = eig.eigenvectors.column(imax).into_owned().normalize();
    if v.z < 0.0 {
        v = -v;
    }
    if !(v.z > 0.0) {
        return Err(LaserError::IllConditionedFit {
            beam_id: id,
            span_m: span,
            min_m: MIN_DEPTH_SPAN_M,
        });
    }
    let origin = c - v * (c.z / v.z);
    let rms = (pts
        .iter()
        .map(|p| (p - origin).cross(&v).norm_squared())
        .sum::<f64>()
        / n)
        .sqrt();
    let beam = LaserBeam::new(id, Vec3::new(origin.x, origin.y, 0.0), v)?;
    Ok((
        beam,
        BeamFit {
            id,
            observations: pts.len(),
            depth_span_m: span,
            rms_m: rms,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn obs(id: u32, o: Vec3, v: Vec3, zs: &[f64]) -> Vec<CalibrationObservation> {
        let v = v.normalize();
        zs.iter()
            .map(|&z| CalibrationObservation {
                beam_id: id,
                point: o + v * ((z - o.z) / v.z),
            })
            .collect()
    }

    #[test]
    fn axis_aligned_beam_is_recovered_exactly() {
        let rig = calibrate_rig(&obs(1, Vec3::new(0.1, 0.0, 0.0), Vec3::z(), &[1.0, 2.0, 3.0])).unwrap();
        let b = rig.beam(1).unwrap();
        assert!((b.origin - Vec3::new(0.1, 0.0, 0.0)).norm() <= 1e-12);
        assert!((b.direction - Vec3::z()).norm() <= 1e-12);
        assert_eq!(b.origin.z, 0.0);
    }

    #[test]
    fn tilted_beam_is_recovered() {
        let o = Vec3::new(-0.07, 0.03, 0.0);
        let v = Vec3::new(0.02, 0.0, 1.0);
        let rig = calibrate_rig(&obs(4, o, v, &[1.0, 1.7, 2.2, 3.1, 4.0])).unwrap();
        let b = rig.beam(4).unwrap();
        assert!((b.origin - o).norm() <= 1e-10);
        assert!((b.direction - v.normalize()).norm() <= 1e-10);
        assert!(rig.calibration[0].rms_m < 1e-12);
    }

    #[test]
    fn noisy_calibration_origin_error_below_3mm() {
        let o = Vec3::new(0.1, -0.05, 0.0);
        let v = Vec3::new(0.03, -0.01, 1.0);
        let zs: Vec<f64> = (0..20).map(|i| 1.0 + 4.0 * i as f64 / 19.0).collect();
        let clean = obs(1, o, v, &zs);
        let noise = Normal::new(0.0, 0.001).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..500 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noisy: Vec<_> = clean
                .iter()
                .map(|c| CalibrationObservation {
                    beam_id: 1,
                    point: c.point
                        + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)),
                })
                .collect();
            let rig = calibrate_rig(&noisy).unwrap();
            worst = worst.max((rig.beam(1).unwrap().origin - o).norm());
        }
        assert!(worst < 0.003, "worst origin error {worst}");
    }

    #[test]
    fn calibration_errors() {
        let one = obs(2, Vec3::zeros(), Vec3::z(), &[1.0]);
        assert!(matches!(
            calibrate_rig(&one),
            Err(LaserError::InsufficientObservations { beam_id: 2, got: 1 })
        ));
        let shallow = obs(3, Vec3::new(0.1, 0.0, 0.0), Vec3::z(), &[1.0, 1.05]);
        assert!(matches!(
            calibrate_rig(&shallow),
            Err(LaserError::IllConditionedFit { beam_id: 3, .. })
        ));
    }

    #[test]
    fn parallel_checks() {
        let rig = LaserRig::new(
            vec![
                LaserBeam::new(1, Vec3::zeros(), Vec3::z()).unwrap(),
                LaserBeam::new(2, Vec3::new(0.1, 0.0, 0.0), Vec3::z()).unwrap(),
                LaserBeam::new(
                    3,
                    Vec3::new(0.0, 0.1, 0.0),
                    Vec3::new(1f64.to_radians().sin(), 0.0, 1f64.to_radians().cos()),
                )
                .unwrap(),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(check_parallel(&rig, 1, 2).unwrap(), 0.0);
        assert!((check_parallel(&rig, 1, 3).unwrap() - 1f64.to_radians()).abs() <= 1e-12);
        assert!(matches!(check_parallel(&rig, 1, 9), Err(LaserError::UnknownBeam(9))));
    }

    #[test]
    fn config_a_fixture() {
        let rig = builtin_config(RigConfig::A);
        assert_eq!(rig.beams.len(), 4);
        let origins: Vec<Vec3> = rig.beams.iter().map(|b| b.origin).collect();
        for o in [
            Vec3::new(0.1, 0.0, 0.0),
            Vec3::new(-0.1, 0.0, 0.0),
            Vec3::new(0.0, 0.1, 0.0),
            Vec3::new(0.0, -0.1, 0.0),
        ] {
            assert!(origins.contains(&o));
        }
        for a in rig.beam_ids() {
            for b in rig.beam_ids() {
                assert_eq!(check_parallel(&rig, a, b).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn config_b_fixture() {
        let rig = builtin_config(RigConfig::B);
        assert_eq!(rig.beams.len(), 2);
        let (a, b) = (rig.beam(1).unwrap(), rig.beam(2).unwrap());
        assert!((perpendicular_distance(a, b) - 0.10).abs() < 1e-15);
        assert_eq!(rig.pairs[0].distance_m, 0.10);
        assert!((angle_between(&a.direction, &Vec3::z()) - 5f64.to_radians()).abs() < 1e-12);
        assert!(check_parallel(&rig, 1, 2).unwrap() < 1e-15);
    }

    #[test]
    fn config_c_fixture() {
        let rig = builtin_config(RigConfig::C);
        assert_eq!(rig, builtin_config(RigConfig::C));
        assert_eq!(rig.beams.len(), 4);
        for b in &rig.beams {
            assert!((b.origin.norm() - 0.165).abs() < 1e-12);
            assert!(angle_between(&b.direction, &Vec3::z()) <= 2f64.to_radians() + 1e-12);
        }
        // the perturbed beams are not parallel enough for the pair method
        assert!(rig
            .pairs
            .iter()
            .any(|p| check_parallel(&rig, p.a, p.b).unwrap() > PARALLEL_TOLERANCE_RAD));
    }

    #[test]
    fn invalid_rigs_rejected() {
        let z = Vec3::z();
        assert!(LaserBeam::new(1, Vec3::new(0.0, 0.0, 0.1), z).is_err());
        assert!(LaserBeam::new(1, Vec3::zeros(), -z).is_err());
        let beams = vec![LaserBeam::new(1, Vec3::zeros(), z).unwrap()];
        assert!(matches!(
            LaserRig::new(beams.clone(), vec![LaserPair { a: 1, b: 2, distance_m: 0.1 }]),
            Err(LaserError::UnknownBeam(2))
        ));
        assert!(LaserRig::new(beams, vec![LaserPair { a: 1, b: 1, distance_m: 0.1 }]).is_err());
    }

    #[test]
    fn rig_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rig.json");
        let rig = builtin_config(RigConfig::C);
        rig.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"distance_m\""));
        let back = LaserRig::load(&path).unwrap();
        for (a, b) in rig.beams.iter().zip(&back.beams) {
            assert!((a.direction - b.direction).norm() < 1e-15);
            assert_eq!(a.origin, b.origin);
        }
        assert_eq!(rig.pairs, back.pairs);
    }

    #[test]
    fn observation_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        std::fs::write(&path, "beam_id,x,y,z\n1,0.1,0,1\n1,0.1,0,2\n1,0.1,0,3\n").unwrap();
        let obs = read_calibration_observations(&path).unwrap();
        assert_eq!(obs.len(), 3);
        let rig = calibrate_rig(&obs).unwrap();
        assert!((rig.beam(1).unwrap().origin.x - 0.1).abs() < 1e-12);
        std::fs::write(&path, "beam_id,x,y,z\n1,0.1,0,-1\n").unwrap();
        assert!(read_calibration_observations(&path).is_err());
    }
}
