//! How feature noise alone propagates into the scale through the pose.

use laserscale::laser::{builtin_config, RigConfig};
use laserscale::simulate::{run_monte_carlo, view_grid, CellKey, MonteCarloSpec, StudyMethod, TerrainKind, TerrainSpec};

fn spec() -> MonteCarloSpec {
    MonteCarloSpec {
        terrain: TerrainSpec::new(TerrainKind::Smooth, 7),
        anchor_xy: [0.0, 0.0],
        rig: builtin_config(RigConfig::B),
        distances: vec![3.0],
        angles: view_grid(15.0, 5.0),
        sigma_f: vec![0.5, 1.0],
        sigma_l: vec![0.0, 0.25],
        outlier_ratios: vec![0.0],
        repeats: 80,
        n_features: 400,
        seed: 21,
        methods: vec![StudyMethod::FcmAll],
    }
}

#[test]
fn feature_noise_spread_is_linear_and_small_next_to_laser_noise() {
    let out = run_monte_carlo(&spec()).unwrap();
    let std = |f: usize, l: usize| {
        let key = CellKey {
            distance: 0,
            sigma_f: f,
            sigma_l: l,
            outlier_ratio: 0,
            method: StudyMethod::FcmAll,
        };
        let c = out.cell(&key).unwrap();
        assert_eq!(c.failures, 0);
        c.std
    };
    let (f05, f10, laser) = (std(0, 0), std(1, 0), std(0, 1));
    // exact spots: the spread comes from the pose and doubles with σ_f
    assert!(f05 > 0.0);
    let ratio = f10 / f05;
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    // an order of magnitude below what quarter-pixel spot noise adds
    assert!(laser > 20.0 * f05, "{laser} vs {f05}");
    assert!(f05 < 2e-4, "{f05}");
}
