//! Bounding-volume hierarchy over mesh triangles, built with a binned
//! surface-area heuristic and stored as a flat node array.

use super::{closer, intersect_triangle, TriangleMesh};
use crate::geometry::{Ray, Vec3};

const LEAF_SIZE: usize = 4;
const BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn grow_point(self, p: &Vec3) -> Self {
        Self {
            min: self.min.inf(p),
            max: self.max.sup(p),
        }
    }

    pub fn union(self, other: &Aabb) -> Self {
        Self {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && self.max.x >= other.min.x
            && self.min.y <= other.max.y
            && self.max.y >= other.min.y
            && self.min.z <= other.max.z
            && self.max.z >= other.min.z
    }

    /// Grows the box by a relative margin so slab tests stay conservative
    /// for flat (zero-thickness) boxes.
    fn padded(self) -> Self {
        let scale = 1.0 + self.min.amax().max(self.max.amax());
        let pad = Vec3::repeat(1e-9 * scale);
        Self {
            min: self.min - pad,
            max: self.max + pad,
        }
    }

    /// Entry distance of the ray into the box, if it enters before `t_max`.
    #[inline]
    fn entry(&self, origin: &Vec3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for axis in 0..3 {
            let a = (self.min[axis] - origin[axis]) * inv_dir[axis];
            let b = (self.max[axis] - origin[axis]) * inv_dir[axis];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            // NaN (0 · ∞) leaves the interval untouched
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the right child (the
    /// left child immediately follows the node).
    offset: u32,
    /// Zero for interior nodes.
    count: u32,
}

/// Immutable acceleration structure; queries are read-only and thread-safe.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

struct BuildItem {
    bounds: Aabb,
    centroid: Vec3,
    index: u32,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let mut items: Vec<BuildItem> = (0..mesh.triangle_count())
            .map(|i| {
                let [a, b, c] = mesh.corners(i);
                let bounds = Aabb::empty().grow_point(&a).grow_point(&b).grow_point(&c);
                BuildItem {
                    bounds,
                    centroid: bounds.center(),
                    index: i as u32,
                }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * items.len() / LEAF_SIZE + 1);
        let len = items.len();
        build_recursive(&mut items, 0, len, &mut nodes);
        Self {
            nodes,
            order: items.iter().map(|it| it.index).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.count > 0 {
                1
            } else {
                1 + walk(nodes, i + 1).max(walk(nodes, n.offset as usize))
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    /// Nearest `(t, triangle, u, v)` along the ray.
    pub(crate) fn nearest(&self, mesh: &TriangleMesh, ray: &Ray) -> Option<(f64, usize, f64, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z);
        let mut best: Option<(f64, usize, f64, f64)> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        self.nodes[0].bounds.entry(&ray.origin, &inv, f64::INFINITY)?;
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let limit = best.map_or(f64::INFINITY, |b| b.0);
            // `<=` keeps equal-distance candidates alive for the index tie-break
            match node.bounds.entry(&ray.origin, &inv, limit) {
                Some(t) if t <= limit => {}
                _ => continue,
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    let [a, b, c] = mesh.corners(tri as usize);
                    if let Some((t, u, v)) = intersect_triangle(ray, &a, &b, &c) {
                        if closer(t, tri as usize, best.map(|b| (b.0, b.1))) {
                            best = Some((t, tri as usize, u, v));
                        }
                    }
                }
            } else {
                let left = ni + 1;
                let right = node.offset;
                let tl = self.nodes[left as usize].bounds.entry(&ray.origin, &inv, limit);
                let tr = self.nodes[right as usize].bounds.entry(&ray.origin, &inv, limit);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        // push the farther child first so the nearer pops first
                        if a <= b {
                            stack.push(right);
                            stack.push(left);
                        } else {
                            stack.push(left);
                            stack.push(right);
                        }
                    }
                    (Some(_), None) => stack.push(left),
                    (None, Some(_)) => stack.push(right),
                    (None, None) => {}
                }
            }
        }
        best
    }

    pub(crate) fn query_box(&self, query: &Aabb, out: &mut Vec<usize>) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                out.extend(
                    self.order[start..start + node.count as usize]
                        .iter()
                        .map(|&t| t as usize),
                );
            } else {
                stack.push(ni + 1);
                stack.push(node.offset);
            }
        }
    }
}

fn build_recursive(items: &mut [BuildItem], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &mut items[start..end];
    let bounds = slice
        .iter()
        .fold(Aabb::empty(), |b, it| b.union(&it.bounds))
        .padded();
    let node_index = nodes.len();
    nodes.push(Node {
        bounds,
        offset: start as u32,
        count: (end - start) as u32,
    });
    if end - start <= LEAF_SIZE {
        return node_index;
    }

    let centroid_bounds = slice
        .iter()
        .fold(Aabb::empty(), |b, it| b.grow_point(&it.centroid));
    let extent = centroid_bounds.extent();
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= 0.0 {
        // all centroids coincide; split in the middle
        let mid = start + (end - start) / 2;
        return split_at(items, start, mid, end, node_index, nodes);
    }

    let lo = centroid_bounds.min[axis];
    let scale = BINS as f64 / extent[axis];
    let bin_of = |c: f64| (((c - lo) * scale) as usize).min(BINS - 1);
    let mut bin_bounds = [Aabb::empty(); BINS];
    let mut bin_counts = [0usize; BINS];
    for it in slice.iter() {
        let b = bin_of(it.centroid[axis]);
        bin_bounds[b] = bin_bounds[b].union(&it.bounds);
        bin_counts[b] += 1;
    }
    let mut best_cost = f64::INFINITY;
    let mut best_split = 0;
    for split in 1..BINS {
        let (mut lb, mut lc) = (Aabb::empty(), 0);
        for b in 0..split {
            lb = lb.union(&bin_bounds[b]);
            lc += bin_counts[b];
        }
        let (mut rb, mut rc) = (Aabb::empty(), 0);
        for b in split..BINS {
            rb = rb.union(&bin_bounds[b]);
            rc += bin_counts[b];
        }
        if lc == 0 || rc == 0 {
            continue;
        }
        let cost = lb.surface_area() * lc as f64 + rb.surface_area() * rc as f64;
        if cost < best_cost {
            best_cost = cost;
            best_split = split;
        }
    }
    let mid = if best_split == 0 {
        start + (end - start) / 2
    } else {
        let mut i = 0;
        let mut j = slice.len();
        while i < j {
            if bin_of(slice[i].centroid[axis]) < best_split {
                i += 1;
            } else {
                j -= 1;
                slice.swap(i, j);
            }
        }
        start + i
    };
    let mid = if mid == start || mid == end {
        start + (end - start) / 2
    } else {
        mid
    };
    split_at(items, start, mid, end, node_index, nodes)
}

fn split_at(
    items: &mut [BuildItem],
    start: usize,
    mid: usize,
    end: usize,
    node_index: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    build_recursive(items, start, mid, nodes);
    let right = build_recursive(items, mid, end, nodes);
    nodes[node_index].offset = right as u32;
    nodes[node_index].count = 0;
    node_index
}
