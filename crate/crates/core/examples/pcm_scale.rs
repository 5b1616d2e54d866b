//! PCM against the depth difference of its two spots on tilted planes.
//! The beams of rig B sit 15 cm off the optical center, so the viewing
//! direction of the spot midpoint differs from the beam direction and the
//! approximation shows once the spots lie at different depths.

use laserscale::geometry::{axis_angle, project, CameraIntrinsics, CameraPose, Ray, Vec3};
use laserscale::laser::{builtin_config, RigConfig};
use laserscale::mesh::{MeshIndex, TriangleMesh};
use laserscale::scaling::{pcm_scale, LaserDetection};

fn plane(tilt_deg: f64) -> MeshIndex {
    // plane z = 0 rotated about the y axis, beams hit it around x = 0
    let r = axis_angle(&Vec3::y(), tilt_deg.to_radians());
    let h = 5.0;
    let v = [(-h, -h), (h, -h), (h, h), (-h, h)].map(|(x, y)| r * Vec3::new(x, y, 0.0));
    MeshIndex::build(TriangleMesh::new(v.to_vec(), vec![[0, 1, 2], [0, 2, 3]]).unwrap())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = CameraIntrinsics::pinhole(1400.0, 1400.0, 960.0, 540.0).with_image_size(1920, 1080);
    let pose = CameraPose::from_rotation(axis_angle(&Vec3::x(), std::f64::consts::PI), Vec3::new(0.0, 0.0, 3.0));
    let rig = builtin_config(RigConfig::B);
    let pair = rig.pairs[0];
    println!("tilt   depth diff (m)   PCM s      |s - 1|");
    for tilt in [0.0, 10.0, 20.0, 30.0, 40.0] {
        let index = plane(tilt);
        let mut dets = Vec::new();
        let mut depth = Vec::new();
        for id in [pair.a, pair.b] {
            let b = rig.beam(id)?;
            let ray = Ray::new(pose.camera_to_world(&b.origin), pose.camera_direction_to_world(&b.direction))?;
            let hit = index.ray_cast(&ray).ok_or("beam misses")?;
            dets.push(LaserDetection::new(id, project(&k, &pose, &hit.point)?));
            depth.push(pose.world_to_camera(&hit.point).z);
        }
        let (s, _) = pcm_scale(&index, &k, &pose, &pair, &dets)?;
        println!("{tilt:>4}   {:>14.4}   {s:.6}   {:.2e}", depth[1] - depth[0], (s - 1.0).abs());
    }
    Ok(())
}
