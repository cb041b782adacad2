mod common;

use common::OracleCase;

#[test]
fn particle_filter_matches_grid_bayes() {
    for seed in 0..4 {
        let case = OracleCase::new(seed, 20);
        let grid = case.grid_posterior_mean(100.0);
        let pf = case.particle_posterior_mean(100.0, 10_000, 1000 + seed);
        assert!((grid - pf).norm() <= 2.0, "seed {seed}: grid {grid:?} pf {pf:?}");
        assert!((grid - case.target).norm() < 20.0, "grid posterior far from truth: {grid:?}");
    }
}
