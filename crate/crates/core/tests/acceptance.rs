//! Acceptance suite. Each test is one criterion and prints a single
//! `[PASS]`/`[FAIL]` line before asserting.
//!
//! The default sweep is computed once and shared between the tests that read
//! it.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use fastlim_core::harness::oracle::OracleSetup;
use fastlim_core::harness::refine::{Direction, RefinementSetup};
use fastlim_core::harness::sweep::monotonicity_violations;
use fastlim_core::harness::{
    run_homogeneous_oracle, run_refinement_study, run_stability_probe, run_sweep, ExperimentConfig,
    SweepOutcome,
};
use fastlim_core::{
    qp_density, qp_residual_norm, solve_shifted_poisson, FastState, Grid1D, TransitionPair,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Sweep {
    outcome: SweepOutcome,
    seconds: f64,
}

fn default_sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let outcome = run_sweep(&ExperimentConfig::default()).expect("default sweep runs");
        Sweep {
            outcome,
            seconds: start.elapsed().as_secs_f64(),
        }
    })
}

fn verdict(name: &str, passed: bool, detail: String) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {name}: {detail}");
    assert!(passed, "{name}: {detail}");
}

#[test]
fn criterion_01_sqrt_epsilon_convergence_rate() {
    let sweep = default_sweep();
    let (r, s) = (sweep.outcome.rate_r.unwrap(), sweep.outcome.rate_s.unwrap());
    let band = 0.35..=0.65;
    let passed = band.contains(&r.slope)
        && band.contains(&s.slope)
        && r.r_squared >= 0.95
        && s.r_squared >= 0.95
        && sweep.seconds <= 600.0;
    verdict(
        "sqrt-epsilon convergence rate",
        passed,
        format!(
            "err_R slope {:.4} (r^2 {:.4}), err_S slope {:.4} (r^2 {:.4}), band [0.35, 0.65], sweep {:.1}s",
            r.slope, r.r_squared, s.slope, s.r_squared, sweep.seconds
        ),
    );
}

#[test]
fn criterion_02_critical_manifold_rate() {
    let fit = default_sweep().outcome.rate_manifold.unwrap();
    verdict(
        "critical-manifold rate",
        (0.35..=0.65).contains(&fit.slope),
        format!(
            "slope {:.4} (r^2 {:.4}), band [0.35, 0.65]",
            fit.slope, fit.r_squared
        ),
    );
}

#[test]
fn criterion_03_monotone_error_decay() {
    let recs = &default_sweep().outcome.records;
    let err_r: Vec<f64> = recs.iter().map(|r| r.err_r_l2).collect();
    let err_s: Vec<f64> = recs.iter().map(|r| r.err_s_l2).collect();
    let (vr, vs) = (
        monotonicity_violations(&err_r),
        monotonicity_violations(&err_s),
    );
    verdict(
        "monotone error decay",
        vr.is_empty() && vs.is_empty() && recs.len() == 8,
        format!(
            "{} points, violations err_R {vr:?}, err_S {vs:?}, 5% slack",
            recs.len()
        ),
    );
}

#[test]
fn criterion_04_toxicity_lower_bound() {
    let out = &default_sweep().outcome;
    // inf S0 = 1 + cos 1 and rho = 0.2, so the floor at T = 5 is e^{-1}(1 + cos 1).
    let inf_s0 = 1.0 + 1f64.cos();
    assert!((inf_s0 - 1.540_302_305_868_139_7).abs() < 1e-15);
    let final_floor = (-0.2f64 * 5.0).exp() * inf_s0;
    assert!((final_floor - 0.566_645_551_517_855_3).abs() < 1e-15);
    let worst = out
        .points
        .iter()
        .map(|p| p.toxicity_floor_margin)
        .fold(out.limit.toxicity_floor_margin, f64::min);
    verdict(
        "toxicity lower bound",
        worst >= -1e-6,
        format!(
            "smallest min_x S(t) - e^(-rho t)(1 + cos 1) over {} runs: {worst:.3e}; final floor {final_floor:.4}",
            out.points.len() + 1
        ),
    );
}

#[test]
fn criterion_05_l_infinity_ceiling() {
    let out = &default_sweep().outcome;
    let fine = Grid1D::new(1.0, 4096).unwrap();
    let max_r0 = fine
        .nodes()
        .iter()
        .map(|&x| 2.0 + (10.0 * x).sin() + (20.0 * x).cos())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max_r0 <= 4.0);
    let ceiling = max_r0.max(1.0) * 1.01;
    verdict(
        "L-infinity ceiling",
        out.limit.max_r <= ceiling,
        format!(
            "limit max R {:.6}, ceiling {ceiling:.6} (max R0 {max_r0:.6})",
            out.limit.max_r
        ),
    );
}

#[test]
fn criterion_06_positivity() {
    let out = &default_sweep().outcome;
    let worst = out
        .points
        .iter()
        .map(|p| p.min_value)
        .fold(out.limit.min_value, f64::min);
    verdict(
        "positivity",
        worst >= -1e-12,
        format!("smallest field value over all runs and snapshots {worst:.3e}"),
    );
}

#[test]
fn criterion_07_qp_nonnegativity() {
    let grid = Grid1D::new(1.0, 16).unwrap();
    let pair = TransitionPair::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut negatives = 0usize;
    let mut pointwise = 0usize;
    let states = 10_000;
    for _ in 0..states {
        let mut field = || -> Vec<f64> { (0..16).map(|_| rng.gen_range(0.0..5.0)).collect() };
        let state = FastState::new(0.0, field(), field(), field()).unwrap();
        for p in [2.0, 3.0, 4.0] {
            if qp_residual_norm(&state, &pair, &grid, p).unwrap() < 0.0 {
                negatives += 1;
            }
        }
        let (a, b) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        for p in [2.0, 3.0, 4.0] {
            if qp_density(a, b, p) < 0.0 {
                pointwise += 1;
            }
        }
    }
    verdict(
        "Q_p nonnegativity",
        negatives == 0 && pointwise == 0,
        format!("{states} states x p in {{2, 3, 4}}: {negatives} negative norms, {pointwise} negative densities"),
    );
}

#[test]
fn criterion_08_ode_oracle_equivalence() {
    let report =
        run_homogeneous_oracle(&ExperimentConfig::default(), &OracleSetup::default()).unwrap();
    let detail = report
        .entries
        .iter()
        .map(|e| format!("{} {:?}: {:.3e}", e.system, e.epsilon, e.max_discrepancy))
        .collect::<Vec<_>>()
        .join(", ");
    let covers = report.entries.len() == 3;
    verdict(
        "ODE-oracle equivalence",
        covers && report.passed(),
        format!("{detail}; tolerance 1e-4"),
    );
}

#[test]
fn criterion_09_self_convergence() {
    let report =
        run_refinement_study(&ExperimentConfig::default(), &RefinementSetup::default()).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for st in &report.studies {
        let order = st.order.unwrap_or(f64::NAN);
        let band = match st.direction {
            Direction::Space => 1.6..=2.4,
            Direction::Time => 0.6..=1.4,
        };
        ok &= band.contains(&order);
        parts.push(format!("{:?}/{:?} {order:.3}", st.solver, st.direction));
    }
    verdict("self-convergence", ok, parts.join(", "));
}

#[test]
fn criterion_10_shifted_poisson_correctness() {
    let zeta = 1.0;
    let error = |n: usize| {
        let g = Grid1D::new(1.0, n).unwrap();
        let phi = g.map(|x| -(PI * PI + zeta) * (PI * x).cos());
        let u = solve_shifted_poisson(&phi, zeta, &g).unwrap();
        g.nodes()
            .iter()
            .zip(&u)
            .map(|(&x, v)| (v - (PI * x).cos()).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (error(401), error(801));
    let ratio = coarse / fine;
    verdict(
        "shifted-Poisson correctness",
        coarse < 1e-4 && (ratio - 4.0).abs() <= 0.4,
        format!("max error {coarse:.3e} at n=401, doubling ratio {ratio:.4}"),
    );
}

#[test]
fn criterion_11_stability_probe() {
    let report = run_stability_probe(&ExperimentConfig::default(), 0.1).unwrap();
    let deltas: Vec<f64> = report.entries.iter().map(|e| e.delta).collect();
    assert_eq!(deltas, vec![0.1, 0.01, 0.001]);
    let ratios: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("{:.4}", e.ratio))
        .collect();
    verdict(
        "stability probe",
        report.spread() < 2.0,
        format!(
            "ratios {} across delta = 1e-1, 1e-2, 1e-3; spread {:.4}",
            ratios.join(", "),
            report.spread()
        ),
    );
}
