//! A small Monte Carlo table: mean and std of the scale per noise setting.

use laserscale::laser::{builtin_config, RigConfig};
use laserscale::simulate::{run_monte_carlo, view_grid, MonteCarloSpec, StudyMethod, TerrainKind, TerrainSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = MonteCarloSpec {
        terrain: TerrainSpec::new(TerrainKind::Smooth, 7),
        anchor_xy: [0.0, 0.0],
        rig: builtin_config(RigConfig::B),
        distances: vec![2.0, 3.0, 4.0],
        angles: view_grid(15.0, 5.0),
        sigma_f: vec![0.5],
        sigma_l: vec![0.25, 0.5],
        outlier_ratios: vec![0.0, 0.2],
        repeats: 60,
        n_features: 500,
        seed: 1,
        methods: vec![StudyMethod::FcmAll, StudyMethod::FcmSingle, StudyMethod::Pcm],
    };
    let out = run_monte_carlo(&spec)?;
    println!("d (m)  σ_l   outliers  method      n    mean      std");
    for c in &out.cells {
        println!(
            "{:>5}  {:>4}  {:>8}  {:<10}  {:>3}  {:.5}  {:.5}",
            c.distance,
            c.sigma_l,
            c.outlier_ratio,
            c.key.method.name(),
            c.n,
            c.mean,
            c.std
        );
    }
    for (why, n) in &out.failure_reasons {
        println!("failures: {n} × {why}");
    }
    Ok(())
}
