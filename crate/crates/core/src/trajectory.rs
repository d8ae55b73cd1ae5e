//! Snapshot containers and the fixed-step driver shared by both solvers.

use std::borrow::Cow;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::{ModelParams, TransitionPair};

/// Rejected steps are retried as two half steps, at most this many times in a row.
pub const MAX_HALVINGS: u32 = 20;

/// Entries below this after a step cause the step to be rejected.
pub const REJECT_BELOW: f64 = -1e-8;

/// Any spatial snapshot that carries a total root density and a toxicity.
pub trait Snapshot: Clone + Send + Sync {
    fn time(&self) -> f64;
    fn total_roots(&self) -> Cow<'_, [f64]>;
    fn toxicity(&self) -> &[f64];
    fn fields(&self) -> Vec<&[f64]>;
}

/// Final time, base step and output times of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub dt: f64,
    pub snapshots: Vec<f64>,
}

impl TimeGrid {
    /// `count` uniformly spaced output times on `[0, t_final]`.
    pub fn uniform(t_final: f64, dt: f64, count: usize) -> Result<Self> {
        if count < 2 && t_final > 0.0 {
            return Err(Error::InvalidParameter(
                "need at least two snapshots for a positive final time".into(),
            ));
        }
        let snapshots = if t_final == 0.0 {
            vec![0.0]
        } else {
            let last = (count - 1) as f64;
            (0..count)
                .map(|k| {
                    if k + 1 == count {
                        t_final
                    } else {
                        t_final * k as f64 / last
                    }
                })
                .collect()
        };
        let grid = Self {
            t_final,
            dt,
            snapshots,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "final time must be nonnegative, got {}",
                self.t_final
            )));
        }
        let s = &self.snapshots;
        if s.first() != Some(&0.0) || s.last() != Some(&self.t_final) {
            return Err(Error::InvalidParameter(
                "snapshot times must start at 0 and end at the final time".into(),
            ));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "snapshot times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Counters collected while integrating.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub accepted_steps: u64,
    pub halvings: u64,
    /// Space-time integral of the squared exchange residual `(f r1 - g r2)^2`,
    /// integrated exactly along the exchange sub-flow of every step. Only the
    /// fast solver fills this in.
    pub exchange_residual_sq: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<F> {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub frames: Vec<F>,
    /// Hex digest identifying parameters, transition pair, grid and scheme.
    pub meta: String,
    pub stats: RunStats,
}

impl<F: Snapshot> Trajectory<F> {
    pub fn final_frame(&self) -> &F {
        self.frames
            .last()
            .expect("trajectory always holds the initial frame")
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// Smallest value of any field over all snapshots.
    pub fn min_value(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|f| {
                f.fields()
                    .into_iter()
                    .flatten()
                    .copied()
                    .collect::<Vec<_>>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn fingerprint(
    solver: &str,
    params: &ModelParams,
    pair: &TransitionPair,
    grid: &Grid1D,
    time: &TimeGrid,
) -> String {
    let mut h = Sha256::new();
    h.update(solver.as_bytes());
    h.update(format!("{params:?}|{pair:?}").as_bytes());
    h.update(format!("L={:e};n={}", grid.length(), grid.len()).as_bytes());
    h.update(format!("T={:e};dt={:e}", time.t_final, time.dt).as_bytes());
    for t in &time.snapshots {
        h.update(t.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Checks the post-step acceptance rule: everything finite and nothing below
/// [`REJECT_BELOW`].
pub(crate) fn check_step(t: f64, fields: &[&[f64]]) -> Result<()> {
    for field in fields {
        for &v in field.iter() {
            if !v.is_finite() {
                return Err(Error::StepRejected {
                    t,
                    reason: "non-finite value".into(),
                });
            }
            if v < REJECT_BELOW {
                return Err(Error::StepRejected {
                    t,
                    reason: format!("negative value {v:e}"),
                });
            }
        }
    }
    Ok(())
}

/// Advances `state` over `[t, t + dt]`, splitting rejected steps in half.
fn advance<S, F>(
    state: S,
    t: f64,
    dt: f64,
    depth: u32,
    step: &mut F,
    stats: &mut RunStats,
) -> Result<S>
where
    F: FnMut(&S, f64) -> Result<S>,
{
    match step(&state, dt) {
        Ok(next) => {
            stats.accepted_steps += 1;
            Ok(next)
        }
        Err(Error::StepRejected { .. }) if depth < MAX_HALVINGS => {
            stats.halvings += 1;
            let half = 0.5 * dt;
            let mid = advance(state, t, half, depth + 1, step, stats)?;
            advance(mid, t + half, half, depth + 1, step, stats)
        }
        Err(Error::StepRejected { .. }) => Err(Error::StiffFailure {
            t,
            halvings: MAX_HALVINGS,
        }),
        Err(e) => Err(e),
    }
}

/// Integrates from the initial state, landing exactly on every snapshot time.
///
/// Each interval between snapshots is cut into the fewest equal steps not
/// longer than the base `dt`. `set_time` stamps the snapshot time onto the
/// state so the clock never drifts.
pub(crate) fn integrate<S, F, T>(
    initial: S,
    time: &TimeGrid,
    mut step: F,
    set_time: T,
) -> Result<(Vec<S>, RunStats)>
where
    S: Clone,
    F: FnMut(&S, f64) -> Result<S>,
    T: Fn(&mut S, f64),
{
    time.validate()?;
    let mut stats = RunStats::default();
    let mut frames = Vec::with_capacity(time.snapshots.len());
    frames.push(initial.clone());
    let mut state = initial;
    for w in time.snapshots.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let span = t1 - t0;
        let steps = ((span / time.dt) - 1e-9).ceil().max(1.0) as u64;
        let h = span / steps as f64;
        for k in 0..steps {
            let t = t0 + k as f64 * h;
            state = advance(state, t, h, 0, &mut step, &mut stats)?;
        }
        set_time(&mut state, t1);
        frames.push(state.clone());
    }
    Ok((frames, stats))
}
