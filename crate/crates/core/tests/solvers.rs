//! Solver behaviour against independent references.

use fastlim_core::harness::make_initial;
use fastlim_core::{
    quad_trapezoid, run_fast, run_limit, step_fast, FastState, Grid1D, ModelParams, Snapshot,
    TimeGrid, TransitionPair,
};

const PAIR: TransitionPair = TransitionPair::Power { p: 1.0, q: -1.0 };

/// Explicit RK4 written out by hand for the homogeneous epsilon-system.
fn rk4_fast(y: [f64; 3], p: &ModelParams, t_end: f64, dt: f64) -> [f64; 3] {
    let rhs = |y: [f64; 3]| {
        let (r1, r2, s) = (y[0], y[1], y[2]);
        let f = s;
        let g = 1.0 / (1.0 + s);
        let w = (f * r1 - g * r2) / p.epsilon;
        let head = p.r_hat - r1 - r2;
        [
            p.gamma1 * r1 * head - p.eta1 * r1 - w,
            p.gamma2 * r2 * head - p.eta2 * r2 + w,
            p.mu * (p.eta1 * r1 + p.eta2 * r2) - p.rho * s,
        ]
    };
    let steps = (t_end / dt).round() as usize;
    let mut y = y;
    for _ in 0..steps {
        let add =
            |a: [f64; 3], k: [f64; 3], h: f64| [a[0] + h * k[0], a[1] + h * k[1], a[2] + h * k[2]];
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, dt / 2.0));
        let k3 = rhs(add(y, k2, dt / 2.0));
        let k4 = rhs(add(y, k3, dt));
        for i in 0..3 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn homogeneous_fast_run_matches_hand_rk4() {
    let grid = Grid1D::new(1.0, 9).unwrap();
    let params = ModelParams::baseline(0.1);
    let time = TimeGrid::uniform(0.5, 1e-5, 6).unwrap();
    let ones = vec![1.0; 9];
    let traj = run_fast(&params, &PAIR, &grid, (&ones, &ones, &ones), &time).unwrap();
    let exact = rk4_fast([1.0, 1.0, 1.0], &params, 0.5, 1e-5);
    let last = traj.final_frame();
    for (field, value) in last.fields().iter().zip(exact) {
        for v in field.iter() {
            assert!((v - value).abs() < 1e-4, "{v} vs {value}");
        }
    }
}

#[test]
fn single_step_is_first_order_consistent() {
    // One dt = 1e-3 step against RK4: the local error is O(dt^2 / eps).
    let grid = Grid1D::new(1.0, 5).unwrap();
    let params = ModelParams::baseline(1.0);
    let ones = vec![1.0; 5];
    let state = FastState::new(0.0, ones.clone(), ones.clone(), ones).unwrap();
    let err = |dt: f64| {
        let next = step_fast(&state, &params, &PAIR, &grid, dt).unwrap();
        let e = rk4_fast([1.0; 3], &params, dt, dt / 1000.0);
        (next.r1[2] - e[0])
            .abs()
            .max((next.r2[2] - e[1]).abs())
            .max((next.s[2] - e[2]).abs())
    };
    let (big, small) = (err(1e-3), err(5e-4));
    assert!(big < 2e-5, "{big}");
    let ratio = big / small;
    assert!((3.5..=4.5).contains(&ratio), "local error ratio {ratio}");
}

#[test]
fn experiment_runs_respect_bounds() {
    let grid = Grid1D::new(1.0, 64).unwrap();
    let time = TimeGrid::uniform(2.0, 2e-3, 21).unwrap();
    let (r1, r2, s) = make_initial(&grid);
    let r: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
    let floor0 = s.iter().copied().fold(f64::INFINITY, f64::min);
    for eps in [1.0, 1e-2, 1e-4] {
        let params = ModelParams::baseline(eps);
        let traj = run_fast(&params, &PAIR, &grid, (&r1, &r2, &s), &time).unwrap();
        assert!(traj.min_value() > -1e-12);
        for f in &traj.frames {
            let min_s = f.s.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min_s >= (-params.rho * f.t).exp() * floor0 - 1e-6);
        }
    }
    let params = ModelParams::baseline(1.0);
    let traj = run_limit(&params, &PAIR, &grid, (&r, &s), &time).unwrap();
    let max_r0 = r.iter().copied().fold(0.0, f64::max);
    for f in &traj.frames {
        assert!(f.r.iter().all(|&v| v <= max_r0 * 1.01));
    }
}

#[test]
fn small_epsilon_approaches_limit() {
    let grid = Grid1D::new(1.0, 32).unwrap();
    let time = TimeGrid::uniform(1.0, 1e-3, 11).unwrap();
    let (r1, r2, s) = make_initial(&grid);
    let r: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
    let limit = run_limit(&ModelParams::baseline(1.0), &PAIR, &grid, (&r, &s), &time).unwrap();
    let gap = |eps: f64| {
        let fast = run_fast(
            &ModelParams::baseline(eps),
            &PAIR,
            &grid,
            (&r1, &r2, &s),
            &time,
        )
        .unwrap();
        let d: Vec<f64> = fast
            .final_frame()
            .total()
            .iter()
            .zip(&limit.final_frame().r)
            .map(|(a, b)| (a - b).abs())
            .collect();
        quad_trapezoid(&d, &grid).unwrap()
    };
    let gaps: Vec<f64> = [1.0, 0.1, 0.01].iter().map(|&e| gap(e)).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn trajectory_fingerprint_identifies_inputs() {
    let grid = Grid1D::new(1.0, 8).unwrap();
    let time = TimeGrid::uniform(0.1, 1e-2, 3).unwrap();
    let ones = vec![1.0; 8];
    let a = run_fast(
        &ModelParams::baseline(1.0),
        &PAIR,
        &grid,
        (&ones, &ones, &ones),
        &time,
    )
    .unwrap();
    let b = run_fast(
        &ModelParams::baseline(1.0),
        &PAIR,
        &grid,
        (&ones, &ones, &ones),
        &time,
    )
    .unwrap();
    let c = run_fast(
        &ModelParams::baseline(0.5),
        &PAIR,
        &grid,
        (&ones, &ones, &ones),
        &time,
    )
    .unwrap();
    assert_eq!(a.meta, b.meta);
    assert_ne!(a.meta, c.meta);
    assert_eq!(a.meta.len(), 64);
}
