//! Time integration of the epsilon-system for healthy roots, exposed roots
//! and toxicity.
//!
//! Each step is a first-order Lie splitting:
//!
//! 1. explicit logistic growth, mortality and toxicity production;
//! 2. implicit exchange `(I + dt/eps M(s)) (r1, r2) = (r1*, r2*)` at frozen `s`,
//!    solved in closed form node by node;
//! 3. backward-Euler diffusion of each field, with toxicity decay taken
//!    implicitly as a diagonal shift.
//!
//! Step 2 is exact for the linear exchange subsystem and unconditionally
//! stable, so `dt` never has to resolve `epsilon`.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::grid::{trapezoid, Grid1D, TridiagonalFactor, TridiagonalOperator};
use crate::model::{eval_transition, slow_rates, ModelParams, TransitionPair};
use crate::trajectory::{check_step, fingerprint, integrate, Snapshot, TimeGrid, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct FastState {
    pub t: f64,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub s: Vec<f64>,
}

impl FastState {
    pub fn new(t: f64, r1: Vec<f64>, r2: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        let n = r1.len();
        for v in [&r2, &s] {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: v.len(),
                });
            }
        }
        Ok(Self { t, r1, r2, s })
    }

    pub fn len(&self) -> usize {
        self.r1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r1.is_empty()
    }

    pub fn total(&self) -> Vec<f64> {
        self.r1.iter().zip(&self.r2).map(|(a, b)| a + b).collect()
    }
}

impl Snapshot for FastState {
    fn time(&self) -> f64 {
        self.t
    }

    fn total_roots(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.total())
    }

    fn toxicity(&self) -> &[f64] {
        &self.s
    }

    fn fields(&self) -> Vec<&[f64]> {
        vec![&self.r1, &self.r2, &self.s]
    }
}

/// Step result with the exchange-residual integral accumulated over the step.
struct StepOutput {
    state: FastState,
    exchange_residual_sq: f64,
}

/// Holds factorized diffusion operators for the step sizes seen so far.
pub struct FastStepper<'a> {
    params: &'a ModelParams,
    pair: &'a TransitionPair,
    grid: &'a Grid1D,
    cache: Vec<(f64, [TridiagonalFactor; 3])>,
}

impl<'a> FastStepper<'a> {
    pub fn new(
        params: &'a ModelParams,
        pair: &'a TransitionPair,
        grid: &'a Grid1D,
    ) -> Result<Self> {
        params.validate()?;
        pair.validate()?;
        Ok(Self {
            params,
            pair,
            grid,
            cache: Vec::new(),
        })
    }

    fn factors(&mut self, dt: f64) -> Result<&[TridiagonalFactor; 3]> {
        if let Some(pos) = self.cache.iter().position(|(h, _)| *h == dt) {
            return Ok(&self.cache[pos].1);
        }
        let n = self.grid.len();
        let p = self.params;
        let build = |d: f64, shift: f64| {
            TridiagonalOperator::implicit_product_diffusion(self.grid, &vec![d; n], dt, shift)
                .and_then(|op| op.factor())
        };
        let factors = [
            build(p.d_r1, 0.0)?,
            build(p.d_r2, 0.0)?,
            build(p.d_s, p.rho)?,
        ];
        self.cache.push((dt, factors));
        Ok(&self.cache.last().expect("just pushed").1)
    }

    pub fn step(&mut self, state: &FastState, dt: f64) -> Result<FastState> {
        self.step_detailed(state, dt).map(|o| o.state)
    }

    fn step_detailed(&mut self, state: &FastState, dt: f64) -> Result<StepOutput> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n = self.grid.len();
        if state.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: state.len(),
            });
        }
        let p = *self.params;
        let eps = p.epsilon;
        let ratio = dt / eps;

        let mut r1 = Vec::with_capacity(n);
        let mut r2 = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        let mut residual = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b, tox) = (state.r1[i], state.r2[i], state.s[i]);
            // Roundoff can leave tiny negatives; rates are evaluated on the clamped value.
            let rates = eval_transition(self.pair, tox.max(0.0))?;
            let slow = slow_rates(a, b, &p);
            let a_star = a + dt * slow.dr1;
            let b_star = b + dt * slow.dr2;

            let (f, g) = (rates.f, rates.g);
            let lambda = f + g;
            let w = f * a_star - g * b_star;
            // Exact integral of w^2 along w' = -(lambda/eps) w over the step.
            residual.push(if lambda > 0.0 {
                w * w * eps / (2.0 * lambda) * -(-2.0 * lambda * ratio).exp_m1()
            } else {
                w * w * dt
            });

            let det = 1.0 + ratio * lambda;
            r1.push(((1.0 + ratio * g) * a_star + ratio * g * b_star) / det);
            r2.push((ratio * f * a_star + (1.0 + ratio * f) * b_star) / det);
            s.push(tox + dt * slow.s_source);
        }
        let exchange_residual_sq = trapezoid(&residual, self.grid.dx());

        let [f1, f2, fs] = self.factors(dt)?;
        f1.solve_in_place(&mut r1)?;
        f2.solve_in_place(&mut r2)?;
        fs.solve_in_place(&mut s)?;

        let t = state.t + dt;
        check_step(t, &[&r1, &r2, &s])?;
        Ok(StepOutput {
            state: FastState { t, r1, r2, s },
            exchange_residual_sq,
        })
    }
}

/// One splitting step of the epsilon-system.
pub fn step_fast(
    state: &FastState,
    params: &ModelParams,
    pair: &TransitionPair,
    grid: &Grid1D,
    dt: f64,
) -> Result<FastState> {
    FastStepper::new(params, pair, grid)?.step(state, dt)
}

/// Integrates the epsilon-system from `(r1, r2, s)` and records a frame at
/// every snapshot time.
pub fn run_fast(
    params: &ModelParams,
    pair: &TransitionPair,
    grid: &Grid1D,
    initial: (&[f64], &[f64], &[f64]),
    time: &TimeGrid,
) -> Result<Trajectory<FastState>> {
    let (r10, r20, s0) = initial;
    let init = FastState::new(0.0, r10.to_vec(), r20.to_vec(), s0.to_vec())?;
    if init.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: init.len(),
        });
    }
    if init.fields().iter().any(|f| f.iter().any(|v| !(*v >= 0.0))) {
        return Err(Error::InvalidParameter(
            "initial data must be finite and nonnegative".into(),
        ));
    }
    let mut stepper = FastStepper::new(params, pair, grid)?;
    let mut residual_sq = 0.0;
    let (frames, mut stats) = integrate(
        init,
        time,
        |st, dt| {
            let out = stepper.step_detailed(st, dt)?;
            residual_sq += out.exchange_residual_sq;
            Ok(out.state)
        },
        |st, t| st.t = t,
    )?;
    stats.exchange_residual_sq = Some(residual_sq);
    Ok(Trajectory {
        grid: grid.clone(),
        times: time.snapshots.clone(),
        frames,
        meta: fingerprint("fast-lie-splitting", params, pair, grid, time),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::quad_trapezoid;

    const POWER: TransitionPair = TransitionPair::Power { p: 1.0, q: -1.0 };

    fn constant_state(n: usize, r1: f64, r2: f64, s: f64) -> FastState {
        FastState::new(0.0, vec![r1; n], vec![r2; n], vec![s; n]).unwrap()
    }

    fn inert_params(eps: f64) -> ModelParams {
        ModelParams {
            gamma1: 0.0,
            gamma2: 0.0,
            eta1: 0.0,
            eta2: 0.0,
            mu: 0.0,
            rho: 0.0,
            ..ModelParams::baseline(eps)
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = Grid1D::new(1.0, 16).unwrap();
        let st = constant_state(16, 0.0, 0.0, 0.0);
        for dt in [1e-4, 0.1, 2.0] {
            let next = step_fast(&st, &ModelParams::baseline(0.01), &POWER, &grid, dt).unwrap();
            assert!(next.fields().iter().all(|f| f.iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn on_manifold_constant_state_is_fixed_without_kinetics() {
        // f(1) = 1 and g(1) = 1/2, so (1, 2, 1) sits on the manifold.
        let grid = Grid1D::new(1.0, 16).unwrap();
        let st = constant_state(16, 1.0, 2.0, 1.0);
        let next = step_fast(&st, &inert_params(1e-3), &POWER, &grid, 0.01).unwrap();
        for (a, b) in next.fields().iter().zip(st.fields()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn exchange_conserves_mass_without_kinetics() {
        let grid = Grid1D::new(1.0, 64).unwrap();
        let params = inert_params(1e-3);
        let mut st = FastState::new(
            0.0,
            grid.map(|x| 1.0 + (10.0 * x).sin()),
            grid.map(|x| 1.0 + (20.0 * x).cos()),
            grid.map(|x| 1.0 + x.cos()),
        )
        .unwrap();
        let mut stepper = FastStepper::new(&params, &POWER, &grid).unwrap();
        let mass = |s: &FastState| quad_trapezoid(&s.total(), &grid).unwrap();
        for _ in 0..50 {
            let next = stepper.step(&st, 1e-3).unwrap();
            let (m0, m1) = (mass(&st), mass(&next));
            assert!((m1 - m0).abs() <= 1e-10 * m0);
            st = next;
        }
    }

    #[test]
    fn rejects_bad_step_inputs() {
        let grid = Grid1D::new(1.0, 8).unwrap();
        let st = constant_state(8, 1.0, 1.0, 1.0);
        let params = ModelParams::baseline(0.1);
        assert!(step_fast(&st, &params, &POWER, &grid, 0.0).is_err());
        let short = constant_state(7, 1.0, 1.0, 1.0);
        assert!(matches!(
            step_fast(&short, &params, &POWER, &grid, 0.1),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn overly_long_step_is_rejected() {
        // Explicit logistic update with dt (gamma r + eta) > 1 goes negative.
        let grid = Grid1D::new(1.0, 8).unwrap();
        let st = constant_state(8, 3.0, 3.0, 1.0);
        let err = step_fast(&st, &ModelParams::baseline(0.1), &POWER, &grid, 0.5).unwrap_err();
        assert!(matches!(err, Error::StepRejected { .. }));
    }

    #[test]
    fn run_recovers_from_rejections_by_halving() {
        let grid = Grid1D::new(1.0, 8).unwrap();
        let st = constant_state(8, 3.0, 3.0, 1.0);
        let tg = TimeGrid::uniform(1.0, 0.5, 2).unwrap();
        let traj = run_fast(
            &ModelParams::baseline(0.1),
            &POWER,
            &grid,
            (&st.r1, &st.r2, &st.s),
            &tg,
        )
        .unwrap();
        assert!(traj.stats.halvings > 0);
        assert!(traj.min_value() >= -1e-12);
    }

    #[test]
    fn zero_final_time_gives_initial_frame() {
        let grid = Grid1D::new(1.0, 10).unwrap();
        let st = constant_state(10, 1.0, 0.5, 2.0);
        let tg = TimeGrid::uniform(0.0, 1e-3, 101).unwrap();
        let traj = run_fast(
            &ModelParams::baseline(0.1),
            &POWER,
            &grid,
            (&st.r1, &st.r2, &st.s),
            &tg,
        )
        .unwrap();
        assert_eq!(traj.frames.len(), 1);
        assert_eq!(traj.frames[0], st);
    }

    #[test]
    fn negative_initial_data_is_rejected() {
        let grid = Grid1D::new(1.0, 5).unwrap();
        let tg = TimeGrid::uniform(1.0, 0.1, 2).unwrap();
        let r = [1.0, 1.0, -0.1, 1.0, 1.0];
        assert!(run_fast(&ModelParams::baseline(0.1), &POWER, &grid, (&r, &r, &r), &tg).is_err());
    }

    #[test]
    fn exchange_residual_integral_matches_closed_form() {
        // With no kinetics or gradients, w decays at rate (f+g)/eps inside each
        // exchange sub-step; the accumulated integral over one step is exact.
        let grid = Grid1D::new(1.0, 8).unwrap();
        let params = inert_params(0.01);
        let st = constant_state(8, 2.0, 0.0, 1.0);
        let mut stepper = FastStepper::new(&params, &POWER, &grid).unwrap();
        let out = stepper.step_detailed(&st, 0.02).unwrap();
        // w0 = f(1) * 2 = 2, lambda = 1.5.
        let expected = 4.0 * 0.01 / 3.0 * (1.0 - (-2.0 * 1.5 * 2.0_f64).exp());
        assert!((out.exchange_residual_sq - expected).abs() < 1e-14);
    }
}
