//! Triangle meshes, file ingestion and first-hit ray casting.

mod bvh;
mod io;

pub use bvh::{Aabb, Bvh};
pub use io::{load_mesh, parse_obj, parse_ply, write_obj, write_ply_ascii, MeshFormat};

use crate::geometry::{Ray, Vec3};
use thiserror::Error;

/// Faces with an area at or below this are dropped at load time.
pub const DEGENERATE_AREA: f64 = 1e-12;
/// Hits closer than this to the ray origin are ignored (self-intersection guard).
pub const RAY_T_MIN: f64 = 1e-9;
/// Determinant threshold of the ray/triangle test.
pub const DETERMINANT_EPSILON: f64 = 1e-12;
/// Slack on barycentric coordinates so rays through shared edges are not lost.
const BARYCENTRIC_SLACK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("mesh has no usable triangles")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index} but only {count} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveFactor(f64),
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Indexed triangle mesh. Construction enforces in-range indices and drops
/// degenerate faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
    dropped_degenerate: usize,
}

impl TriangleMesh {
    /// Validates indices, drops faces with area ≤ [`DEGENERATE_AREA`] and
    /// computes area-weighted vertex normals.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        Self::with_normals(vertices, triangles, None)
    }

    /// Like [`Self::new`] but keeps caller-supplied per-vertex normals when
    /// their count matches the vertex count.
    pub fn with_normals(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        normals: Option<Vec<Vec3>>,
    ) -> Result<Self, MeshError> {
        let count = vertices.len();
        let mut kept = Vec::with_capacity(triangles.len());
        let mut dropped = 0;
        for (t, tri) in triangles.into_iter().enumerate() {
            for &i in &tri {
                if i as usize >= count {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i as usize,
                        count,
                    });
                }
            }
            if triangle_area(&vertices, &tri) > DEGENERATE_AREA {
                kept.push(tri);
            } else {
                dropped += 1;
            }
        }
        if kept.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let normals = match normals {
            Some(n) if n.len() == count => n,
            _ => vertex_normals(&vertices, &kept),
        };
        Ok(Self {
            vertices,
            triangles: kept,
            normals,
            dropped_degenerate: dropped,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.normals
    }

    /// Number of degenerate faces removed during construction.
    pub fn dropped_degenerate(&self) -> usize {
        self.dropped_degenerate
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, triangle: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[triangle];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unit geometric normal (right-hand winding).
    pub fn face_normal(&self, triangle: usize) -> Vec3 {
        let [a, b, c] = self.corners(triangle);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_area(&self, triangle: usize) -> f64 {
        triangle_area(&self.vertices, &self.triangles[triangle])
    }

    pub fn bounds(&self) -> Aabb {
        self.vertices
            .iter()
            .fold(Aabb::empty(), |b, v| b.grow_point(v))
    }
}

fn triangle_area(vertices: &[Vec3], tri: &[u32; 3]) -> f64 {
    let a = vertices[tri[0] as usize];
    let b = vertices[tri[1] as usize];
    let c = vertices[tri[2] as usize];
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn vertex_normals(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for tri in triangles {
        let a = vertices[tri[0] as usize];
        let b = vertices[tri[1] as usize];
        let c = vertices[tri[2] as usize];
        // unnormalized cross product weights by area
        let n = (b - a).cross(&(c - a));
        for &i in tri {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 {
                n / len
            } else {
                n
            }
        })
        .collect()
}

/// Multiplies every vertex by `factor`.
pub fn scale_mesh(mesh: &TriangleMesh, factor: f64) -> Result<TriangleMesh, MeshError> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(MeshError::NonPositiveFactor(factor));
    }
    Ok(TriangleMesh {
        vertices: mesh.vertices.iter().map(|v| v * factor).collect(),
        triangles: mesh.triangles.clone(),
        normals: mesh.normals.clone(),
        dropped_degenerate: mesh.dropped_degenerate,
    })
}

/// First intersection of a ray with the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Vec3,
    pub triangle_index: usize,
    pub distance: f64,
    pub barycentric: [f64; 3],
}

/// Möller–Trumbore test. Returns `(t, u, v)` with the hit at
/// `(1−u−v)·a + u·b + v·c`. Both faces count as hits.
#[inline]
pub(crate) fn intersect_triangle(ray: &Ray, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(f64, f64, f64)> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < DETERMINANT_EPSILON {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(&p) * inv;
    if !(-BARYCENTRIC_SLACK..=1.0 + BARYCENTRIC_SLACK).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.direction.dot(&q) * inv;
    if v < -BARYCENTRIC_SLACK || u + v > 1.0 + BARYCENTRIC_SLACK {
        return None;
    }
    let t = e2.dot(&q) * inv;
    if t > RAY_T_MIN && t.is_finite() {
        Some((t, u, v))
    } else {
        None
    }
}

/// Lexicographic (distance, triangle index) ordering: nearest wins, ties go to
/// the lower index.
#[inline]
pub(crate) fn closer(t: f64, index: usize, best: Option<(f64, usize)>) -> bool {
    match best {
        None => true,
        Some((bt, bi)) => t < bt || (t == bt && index < bi),
    }
}

fn make_hit(ray: &Ray, triangle_index: usize, t: f64, u: f64, v: f64) -> RayHit {
    RayHit {
        point: ray.at(t),
        triangle_index,
        distance: t,
        barycentric: [1.0 - u - v, u, v],
    }
}

/// Mesh plus its bounding-volume hierarchy. Immutable after construction and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct MeshIndex {
    mesh: TriangleMesh,
    bvh: Bvh,
}

impl MeshIndex {
    pub fn build(mesh: TriangleMesh) -> Self {
        let bvh = Bvh::build(&mesh);
        Self { mesh, bvh }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    /// Nearest hit with distance > [`RAY_T_MIN`], or `None` on a miss.
    pub fn ray_cast(&self, ray: &Ray) -> Option<RayHit> {
        self.bvh
            .nearest(&self.mesh, ray)
            .map(|(t, i, u, v)| make_hit(ray, i, t, u, v))
    }

    /// Reference implementation testing every triangle.
    pub fn ray_cast_brute_force(&self, ray: &Ray) -> Option<RayHit> {
        ray_cast_brute_force(&self.mesh, ray)
    }

    /// Indices of triangles whose bounding boxes overlap `query`.
    pub fn triangles_in_box(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        self.bvh.query_box(query, &mut out);
        out.sort_unstable();
        out
    }

    /// Area-weighted average face normal of the triangles that come within
    /// `radius` of `point`, oriented to have a non-negative dot product with `up`.
    pub fn local_normal(&self, point: &Vec3, radius: f64, up: &Vec3) -> Option<Vec3> {
        let r = Vec3::repeat(radius);
        let query = Aabb::new(point - r, point + r);
        let mut acc = Vec3::zeros();
        for t in self.triangles_in_box(&query) {
            let [a, b, c] = self.mesh.corners(t);
            if (closest_point_on_triangle(point, &a, &b, &c) - point).norm() <= radius {
                let mut n = (b - a).cross(&(c - a));
                if n.dot(up) < 0.0 {
                    n = -n;
                }
                acc += n;
            }
        }
        let len = acc.norm();
        (len > 0.0).then(|| acc / len)
    }
}

/// Point of triangle `abc` nearest to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub fn ray_cast_brute_force(mesh: &TriangleMesh, ray: &Ray) -> Option<RayHit> {
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for i in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.corners(i);
        if let Some((t, u, v)) = intersect_triangle(ray, &a, &b, &c) {
            if closer(t, i, best.map(|b| (b.0, b.1))) {
                best = Some((t, i, u, v));
            }
        }
    }
    best.map(|(t, i, u, v)| make_hit(ray, i, t, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn unit_triangle_at(z: f64) -> (Vec<Vec3>, Vec<[u32; 3]>) {
        (
            vec![
                Vec3::new(0.0, 0.0, z),
                Vec3::new(1.0, 0.0, z),
                Vec3::new(0.0, 1.0, z),
            ],
            vec![[0, 1, 2]],
        )
    }

    pub(crate) fn cube() -> TriangleMesh {
        let v: Vec<Vec3> = (0..8)
            .map(|i| {
                Vec3::new(
                    (i & 1) as f64 * 2.0 - 1.0,
                    ((i >> 1) & 1) as f64 * 2.0 - 1.0,
                    ((i >> 2) & 1) as f64 * 2.0 - 1.0,
                )
            })
            .collect();
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let mut tris = Vec::new();
        for q in quads {
            tris.push([q[0], q[1], q[2]]);
            tris.push([q[0], q[2], q[3]]);
        }
        TriangleMesh::new(v, tris).unwrap()
    }

    #[test]
    fn hits_interior_point() {
        let (v, t) = unit_triangle_at(3.0);
        let index = MeshIndex::build(TriangleMesh::new(v, t).unwrap());
        let ray = Ray::new(Vec3::zeros(), Vec3::new(0.01, 0.01, 1.0)).unwrap();
        let hit = index.ray_cast(&ray).unwrap();
        assert_abs_diff_eq!(hit.point.z, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hit.point.x, 0.03, epsilon = 1e-12);
        assert_eq!(hit.triangle_index, 0);
        let b = hit.barycentric;
        assert_abs_diff_eq!(b[0] + b[1] + b[2], 1.0, epsilon = 1e-12);
        assert!((ray.at(hit.distance) - hit.point).norm() < 1e-9);
    }

    #[test]
    fn first_of_stacked_triangles() {
        let (mut v, mut t) = unit_triangle_at(3.0);
        let (v2, _) = unit_triangle_at(2.0);
        v.extend(v2);
        t.push([3, 4, 5]);
        let index = MeshIndex::build(TriangleMesh::new(v, t).unwrap());
        let ray = Ray::new(Vec3::new(0.1, 0.1, 0.0), Vec3::z()).unwrap();
        let hit = index.ray_cast(&ray).unwrap();
        assert_eq!(hit.triangle_index, 1);
        assert_abs_diff_eq!(hit.distance, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn miss_is_none() {
        let (v, t) = unit_triangle_at(3.0);
        let index = MeshIndex::build(TriangleMesh::new(v, t).unwrap());
        let ray = Ray::new(Vec3::zeros(), -Vec3::z()).unwrap();
        assert!(index.ray_cast(&ray).is_none());
        let ray = Ray::new(Vec3::new(5.0, 5.0, 0.0), Vec3::z()).unwrap();
        assert!(index.ray_cast(&ray).is_none());
    }

    #[test]
    fn degenerate_face_dropped() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let mesh = TriangleMesh::new(v, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(mesh.triangle_count(), 1);
        assert_eq!(mesh.dropped_degenerate(), 1);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let (v, _) = unit_triangle_at(0.0);
        let err = TriangleMesh::new(v, vec![[0, 1, 7]]).unwrap_err();
        assert!(matches!(err, MeshError::IndexOutOfRange { index: 7, .. }));
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(matches!(
            TriangleMesh::new(vec![], vec![]),
            Err(MeshError::EmptyMesh)
        ));
    }

    #[test]
    fn scale_mesh_examples() {
        let mesh = cube();
        assert_eq!(scale_mesh(&mesh, 1.0).unwrap(), mesh);
        let doubled = scale_mesh(&mesh, 2.0).unwrap();
        let d0 = (mesh.vertices()[0] - mesh.vertices()[7]).norm();
        let d1 = (doubled.vertices()[0] - doubled.vertices()[7]).norm();
        assert_abs_diff_eq!(d1, 2.0 * d0, epsilon = 1e-12);
        let s = scale_mesh(&mesh, 4.22).unwrap();
        for (a, b) in mesh.vertices().iter().zip(s.vertices()) {
            assert_abs_diff_eq!(b.norm(), 4.22 * a.norm(), epsilon = 1e-12);
        }
        assert!(matches!(
            scale_mesh(&mesh, 0.0),
            Err(MeshError::NonPositiveFactor(_))
        ));
        assert!(scale_mesh(&mesh, -1.0).is_err());
    }

    #[test]
    fn watertight_cube() {
        let index = MeshIndex::build(cube());
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut dir = Vec3::zeros();
                dir[axis] = sign;
                // outside looking in: hits the near face
                let outside = Ray::new(-dir * 5.0 + Vec3::new(0.1, 0.2, 0.3), dir).unwrap();
                let hit = index.ray_cast(&outside).unwrap();
                assert_abs_diff_eq!(hit.distance, 4.0 + sign * -[0.1, 0.2, 0.3][axis], epsilon = 1e-12);
                // inside looking out: hits the far face
                let inside = Ray::new(Vec3::new(0.1, 0.2, 0.3), dir).unwrap();
                let hit = index.ray_cast(&inside).unwrap();
                assert_abs_diff_eq!(hit.point[axis], sign, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn scaled_mesh_scales_distance() {
        let index = MeshIndex::build(cube());
        let scaled = MeshIndex::build(scale_mesh(&cube(), 2.5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let o = Vec3::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), 6.0);
            let target = Vec3::new(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9), 0.0);
            let ray = Ray::new(o, target - o).unwrap();
            let ray_s = Ray::new(o * 2.5, ray.direction).unwrap();
            let a = index.ray_cast(&ray).unwrap();
            let b = scaled.ray_cast(&ray_s).unwrap();
            assert!((b.distance - 2.5 * a.distance).abs() < 1e-9);
            assert_eq!(a.triangle_index, b.triangle_index);
        }
    }

    #[test]
    fn shared_edge_tie_goes_to_lower_index() {
        // Two coplanar triangles sharing the diagonal of a unit square; the
        // ray pierces the diagonal exactly.
        let v = vec![
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
        ];
        let mesh = TriangleMesh::new(v, vec![[0, 2, 3], [0, 1, 2]]).unwrap();
        let index = MeshIndex::build(mesh);
        let ray = Ray::new(Vec3::new(0.5, 0.5, 0.0), Vec3::z()).unwrap();
        let hit = index.ray_cast(&ray).unwrap();
        let brute = index.ray_cast_brute_force(&ray).unwrap();
        assert_eq!(hit.triangle_index, 0);
        assert_eq!(brute.triangle_index, 0);
    }

    #[test]
    fn random_rays_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // random triangle soup
        let mut v = Vec::new();
        let mut t = Vec::new();
        for i in 0..400u32 {
            let c = Vec3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            );
            for _ in 0..3 {
                v.push(c + Vec3::new(
                    rng.random_range(-0.7..0.7),
                    rng.random_range(-0.7..0.7),
                    rng.random_range(-0.7..0.7),
                ));
            }
            t.push([3 * i, 3 * i + 1, 3 * i + 2]);
        }
        let index = MeshIndex::build(TriangleMesh::new(v, t).unwrap());
        for _ in 0..2000 {
            let o = Vec3::new(
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
            );
            let d = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let Ok(ray) = Ray::new(o, d) else { continue };
            let a = index.ray_cast(&ray);
            let b = index.ray_cast_brute_force(&ray);
            match (a, b) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert_eq!(a.triangle_index, b.triangle_index);
                    assert!((a.distance - b.distance).abs() <= 1e-9);
                }
                other => panic!("mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn closest_point_matches_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut r = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for _ in 0..200 {
            let (a, b, c, p) = (r(), r(), r(), r());
            let q = closest_point_on_triangle(&p, &a, &b, &c);
            let mut best = f64::INFINITY;
            let n = 200;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                    best = best.min((a + (b - a) * u + (c - a) * v - p).norm());
                }
            }
            let d = (q - p).norm();
            assert!(d <= best + 1e-12 && d >= best - 0.02, "{d} vs {best}");
        }
    }

    #[test]
    fn local_normal_of_plane() {
        let (v, t) = unit_triangle_at(2.0);
        let index = MeshIndex::build(TriangleMesh::new(v, t).unwrap());
        let n = index
            .local_normal(&Vec3::new(0.3, 0.3, 2.0), 1.0, &Vec3::z())
            .unwrap();
        assert_abs_diff_eq!(n, Vec3::z(), epsilon = 1e-12);
    }
}
