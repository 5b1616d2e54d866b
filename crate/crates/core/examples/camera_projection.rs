//! Projects points through a distorted pinhole camera and back.

use laserscale::geometry::{axis_angle, pixel_to_ray, project, CameraIntrinsics, CameraPose, Vec3};

fn main() {
    let k = CameraIntrinsics::pinhole(1400.0, 1400.0, 960.0, 540.0)
        .with_distortion(-0.05, 0.01, 0.0)
        .with_image_size(1920, 1080);
    // camera 3 m above the origin looking straight down
    let down = axis_angle(&Vec3::x(), std::f64::consts::PI);
    let pose = CameraPose::from_rotation(down, Vec3::new(0.0, 0.0, 3.0));

    println!("point (m)                 pixel              back-projected (m)      error");
    for p in [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.8, 0.3, 0.1), Vec3::new(-1.5, 0.9, -0.2)] {
        let px = project(&k, &pose, &p).expect("point in front of the camera");
        let ray = pixel_to_ray(&k, &pose, &px).expect("undistortion converges");
        // intersect the ray with the point's depth plane
        let t = (p.z - ray.origin.z) / ray.direction.z;
        let back = ray.origin + ray.direction * t;
        println!(
            "({:5.2}, {:5.2}, {:5.2})   ({:7.2}, {:7.2})   ({:5.2}, {:5.2}, {:5.2})   {:.1e}",
            p.x,
            p.y,
            p.z,
            px.u,
            px.v,
            back.x,
            back.y,
            back.z,
            (back - p).norm()
        );
    }
}
