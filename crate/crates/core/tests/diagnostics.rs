//! Property checks of the diagnostics against brute-force references.

use fastlim_core::{
    fit_rate, lp_space_norm, negative_norm, qp_density, qp_residual_norm, FastState, Grid1D,
    TransitionPair,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_qp(state: &FastState, grid: &Grid1D, p: f64) -> f64 {
    let dx = grid.dx();
    let n = state.len();
    (0..n)
        .map(|i| {
            let s = state.s[i];
            let a = s * state.r1[i];
            let b = state.r2[i] / (1.0 + s);
            let q = (a.powf(p - 1.0) - b.powf(p - 1.0)) * (a - b);
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * q * dx
        })
        .sum()
}

proptest! {
    #[test]
    fn qp_norm_matches_brute_force(
        seed in any::<u64>(),
        p in prop::sample::select(vec![2.0, 3.0, 4.0]),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid1D::new(1.0, 12).unwrap();
        let mut f = || -> Vec<f64> { (0..12).map(|_| rng.gen_range(0.0..3.0)).collect() };
        let state = FastState::new(0.0, f(), f(), f()).unwrap();
        let got = qp_residual_norm(&state, &TransitionPair::default(), &grid, p).unwrap();
        let want = brute_qp(&state, &grid, p);
        prop_assert!(got >= 0.0);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn qp_density_sign(a in 0.0..100.0f64, b in 0.0..100.0f64, p in 1.01..6.0f64) {
        prop_assert!(qp_density(a, b, p) >= 0.0);
    }

    #[test]
    fn lp_norm_scales_linearly(c in 0.01..100.0f64, p in 1.0..5.0f64) {
        let grid = Grid1D::new(2.0, 17).unwrap();
        let u = grid.map(|x| (3.0 * x).sin() + 0.3);
        let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
        let a = lp_space_norm(&u, &grid, p).unwrap();
        let b = lp_space_norm(&cu, &grid, p).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn negative_norm_is_bounded_by_l2(k in 0usize..6, zeta in 0.5..4.0f64) {
        // With U = (Lap - zeta)^{-1} u, zeta ||U||^2 + ||U'||^2 = -(u, U) <= ||u|| ||U||,
        // so the negative norm never exceeds ||u|| / sqrt(zeta).
        let grid = Grid1D::new(1.0, 65).unwrap();
        let u = grid.map(|x| (k as f64 * std::f64::consts::PI * x).cos() + 0.1 * x);
        let neg = negative_norm(&u, zeta, &grid).unwrap();
        let l2 = lp_space_norm(&u, &grid, 2.0).unwrap();
        prop_assert!(neg <= l2 / zeta.sqrt() * 1.01);
    }

    #[test]
    fn fit_rate_is_invariant_under_error_scaling(c in 1e-3..1e3f64) {
        let eps: Vec<f64> = (0..6).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect();
        let err: Vec<f64> = eps.iter().map(|e| 0.7 * e.powf(0.37)).collect();
        let scaled: Vec<f64> = err.iter().map(|e| c * e).collect();
        let a = fit_rate(&eps, &err, 1).unwrap();
        let b = fit_rate(&eps, &scaled, 1).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-12);
        prop_assert!((b.intercept - a.intercept - c.log10()).abs() < 1e-10);
    }
}

#[test]
fn fit_rate_recovers_noisy_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps: Vec<f64> = (0..8).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect();
    let err: Vec<f64> = eps
        .iter()
        .map(|e| 0.3 * e.sqrt() * (1.0 + rng.gen_range(-0.02..0.02)))
        .collect();
    let fit = fit_rate(&eps, &err, 1).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.02, "{fit:?}");
    assert!(fit.r_squared > 0.99);
    assert_eq!(fit.points_used, 7);
}
