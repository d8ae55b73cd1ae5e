//! Time integration of the limiting cross-diffusion system for the total
//! roots `R` and the toxicity `S`.
//!
//! Semi-implicit step: the effective diffusion `a(S)` is frozen at the old
//! toxicity so the `R`-solve is linear; reaction sources are explicit and the
//! toxicity decay is implicit.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, TridiagonalFactor, TridiagonalOperator};
use crate::model::{
    effective_diffusion, limit_toxicity_source, reaction_h, xi_split, ModelParams, TransitionPair,
};
use crate::trajectory::{check_step, fingerprint, integrate, Snapshot, TimeGrid, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub t: f64,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
}

impl LimitState {
    pub fn new(t: f64, r: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if r.len() != s.len() {
            return Err(Error::LengthMismatch {
                expected: r.len(),
                actual: s.len(),
            });
        }
        Ok(Self { t, r, s })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

impl Snapshot for LimitState {
    fn time(&self) -> f64 {
        self.t
    }

    fn total_roots(&self) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.r)
    }

    fn toxicity(&self) -> &[f64] {
        &self.s
    }

    fn fields(&self) -> Vec<&[f64]> {
        vec![&self.r, &self.s]
    }
}

pub struct LimitStepper<'a> {
    params: &'a ModelParams,
    pair: &'a TransitionPair,
    grid: &'a Grid1D,
    toxicity_cache: Vec<(f64, TridiagonalFactor)>,
}

impl<'a> LimitStepper<'a> {
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
            toxicity_cache: Vec::new(),
        })
    }

    fn toxicity_factor(&mut self, dt: f64) -> Result<&TridiagonalFactor> {
        if let Some(pos) = self.toxicity_cache.iter().position(|(h, _)| *h == dt) {
            return Ok(&self.toxicity_cache[pos].1);
        }
        let n = self.grid.len();
        let op = TridiagonalOperator::implicit_product_diffusion(
            self.grid,
            &vec![self.params.d_s; n],
            dt,
            self.params.rho,
        )?;
        self.toxicity_cache.push((dt, op.factor()?));
        Ok(&self.toxicity_cache.last().expect("just pushed").1)
    }

    /// Effective diffusion of `R` at every node for the given toxicity.
    pub fn coefficients(&self, s: &[f64]) -> Result<Vec<f64>> {
        s.iter()
            .map(|&v| effective_diffusion(v.max(0.0), self.params, self.pair))
            .collect()
    }

    pub fn step(&mut self, state: &LimitState, dt: f64) -> Result<LimitState> {
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
        if !self.pair.g_positive_on(&state.s) {
            return Err(Error::InvalidParameter(
                "g vanishes on the current toxicity range; the limiting system needs g > 0".into(),
            ));
        }
        let p = self.params;
        let pair = self.pair;
        let a = self.coefficients(&state.s)?;
        let mut r = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for i in 0..n {
            let (ri, si) = (state.r[i], state.s[i].max(0.0));
            r.push(state.r[i] + dt * reaction_h(ri, si, p, pair)?);
            s.push(state.s[i] + dt * limit_toxicity_source(ri, si, p, pair)?);
        }
        TridiagonalOperator::implicit_product_diffusion(self.grid, &a, dt, 0.0)?
            .factor()?
            .solve_in_place(&mut r)?;
        self.toxicity_factor(dt)?.solve_in_place(&mut s)?;

        let t = state.t + dt;
        check_step(t, &[&r, &s])?;
        Ok(LimitState { t, r, s })
    }
}

/// One semi-implicit step of the limiting system.
pub fn step_limit(
    state: &LimitState,
    params: &ModelParams,
    pair: &TransitionPair,
    grid: &Grid1D,
    dt: f64,
) -> Result<LimitState> {
    LimitStepper::new(params, pair, grid)?.step(state, dt)
}

/// Integrates the limiting system from `(R0, S0)`; the caller forms
/// `R0 = R10 + R20`.
pub fn run_limit(
    params: &ModelParams,
    pair: &TransitionPair,
    grid: &Grid1D,
    initial: (&[f64], &[f64]),
    time: &TimeGrid,
) -> Result<Trajectory<LimitState>> {
    let (r0, s0) = initial;
    let init = LimitState::new(0.0, r0.to_vec(), s0.to_vec())?;
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
    let mut stepper = LimitStepper::new(params, pair, grid)?;
    let (frames, stats) = integrate(init, time, |st, dt| stepper.step(st, dt), |st, t| st.t = t)?;
    Ok(Trajectory {
        grid: grid.clone(),
        times: time.snapshots.clone(),
        frames,
        meta: fingerprint("limit-semi-implicit", params, pair, grid, time),
        stats,
    })
}

/// Healthy and exposed root densities recovered from the critical manifold.
pub fn reconstruct_components(
    state: &LimitState,
    pair: &TransitionPair,
) -> Result<(Vec<f64>, Vec<f64>)> {
    state
        .r
        .iter()
        .zip(&state.s)
        .map(|(&r, &s)| xi_split(r, s.max(0.0), pair))
        .collect::<Result<Vec<_>>>()
        .map(|pairs| pairs.into_iter().unzip())
}
