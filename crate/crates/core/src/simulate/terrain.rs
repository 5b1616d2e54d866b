//! Procedural heightfield terrains standing in for a reconstructed seafloor.

use crate::geometry::Vec3;
use crate::mesh::TriangleMesh;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerrainKind {
    /// Gentle undulations, slopes below 10°.
    Smooth,
    /// Fractal relief with 15 cm terraces and near-vertical steps.
    Rough,
}

impl TerrainKind {
    pub fn name(self) -> &'static str {
        match self {
            TerrainKind::Smooth => "smooth",
            TerrainKind::Rough => "rough",
        }
    }
}

impl std::str::FromStr for TerrainKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "smooth" => Ok(TerrainKind::Smooth),
            "rough" => Ok(TerrainKind::Rough),
            other => Err(format!("unknown terrain {other:?} (expected smooth or rough)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainSpec {
    pub kind: TerrainKind,
    /// Side length of the square patch, meters.
    #[serde(default = "default_extent")]
    pub extent_m: f64,
    /// Grid cells per side; the mesh has `2·cells²` triangles.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_extent() -> f64 {
    12.0
}

fn default_cells() -> usize {
    160
}

impl TerrainSpec {
    pub fn new(kind: TerrainKind, seed: u64) -> Self {
        Self {
            kind,
            extent_m: default_extent(),
            cells: default_cells(),
            seed,
        }
    }

    pub fn generate(&self) -> TriangleMesh {
        heightfield(self.extent_m, self.cells, |x, y| height(self.kind, self.seed, x, y))
    }
}

/// Default-resolution terrain (160×160 cells) over a square of side `extent`.
pub fn generate_terrain(kind: TerrainKind, extent: f64, seed: u64) -> TriangleMesh {
    TerrainSpec {
        kind,
        extent_m: extent,
        cells: default_cells(),
        seed,
    }
    .generate()
}

/// Height of the terrain surface above `(x, y)`.
pub fn height(kind: TerrainKind, seed: u64, x: f64, y: f64) -> f64 {
    match kind {
        TerrainKind::Smooth => smooth_height(seed, x, y),
        TerrainKind::Rough => rough_height(seed, x, y),
    }
}

/// Three plane waves whose combined gradient is bounded by `tan 7°`.
fn smooth_height(seed: u64, x: f64, y: f64) -> f64 {
    const WAVELENGTHS: [f64; 3] = [9.0, 6.5, 4.3];
    let slope_budget = 7f64.to_radians().tan() / WAVELENGTHS.len() as f64;
    WAVELENGTHS
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let k = TAU / lambda;
            let dir = TAU * unit_hash(seed, i as u64, 0, 101);
            let phase = TAU * unit_hash(seed, i as u64, 0, 202);
            let amplitude = slope_budget / k;
            amplitude * (k * (x * dir.cos() + y * dir.sin()) + phase).sin()
        })
        .sum()
}

const TERRACE_STEP_M: f64 = 0.15;

fn rough_height(seed: u64, x: f64, y: f64) -> f64 {
    let base = fbm(seed, x, y, 3.0, 5, 0.6);
    let detail = fbm(seed ^ 0x5eed, x, y, 0.4, 2, 0.03);
    terrace(base, TERRACE_STEP_M) + detail
}

/// Flat treads joined by steep risers that take up a fifth of each step.
fn terrace(h: f64, step: f64) -> f64 {
    let q = h / step;
    let floor = q.floor();
    let f = q - floor;
    let g = ((f - 0.8) / 0.2).clamp(0.0, 1.0);
    step * (floor + g * g * (3.0 - 2.0 * g))
}

/// Fractal value noise: `octaves` layers starting at `wavelength`, each at
/// half the wavelength and half the amplitude of the previous one.
fn fbm(seed: u64, x: f64, y: f64, wavelength: f64, octaves: u32, amplitude: f64) -> f64 {
    let mut sum = 0.0;
    let mut amp = amplitude;
    let mut freq = 1.0 / wavelength;
    for o in 0..octaves {
        sum += amp * value_noise(seed.wrapping_add(o as u64 * 0x9e37), x * freq, y * freq);
        amp *= 0.5;
        freq *= 2.0;
    }
    sum
}

/// Lattice value noise in `[-1, 1]` with quintic interpolation.
fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (ix, iy) = (x0 as i64, y0 as i64);
    let lattice = |dx: i64, dy: i64| 2.0 * unit_hash(seed, (ix + dx) as u64, (iy + dy) as u64, 7) - 1.0;
    let fade = |t: f64| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
    let (u, v) = (fade(fx), fade(fy));
    let a = lattice(0, 0) + u * (lattice(1, 0) - lattice(0, 0));
    let b = lattice(0, 1) + u * (lattice(1, 1) - lattice(0, 1));
    a + v * (b - a)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic hash of the inputs mapped to `[0, 1)`.
fn unit_hash(seed: u64, a: u64, b: u64, c: u64) -> f64 {
    let h = splitmix(splitmix(splitmix(splitmix(seed) ^ a) ^ b) ^ c);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Regular grid over `[-extent/2, extent/2]²`, two counter-clockwise
/// triangles per cell (normals point up).
fn heightfield(extent: f64, cells: usize, h: impl Fn(f64, f64) -> f64) -> TriangleMesh {
    let n = cells + 1;
    let step = extent / cells as f64;
    let half = extent / 2.0;
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = -half + i as f64 * step;
            let y = -half + j as f64 * step;
            vertices.push(Vec3::new(x, y, h(x, y)));
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let v00 = (j * n + i) as u32;
            let v10 = v00 + 1;
            let v01 = v00 + n as u32;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("heightfield is a valid mesh")
}
