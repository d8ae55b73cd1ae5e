//! Homogeneous-data check: with spatially constant data both PDE solvers
//! reduce to ODEs, which are integrated independently with classical RK4.

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::{Check, HarnessError};
use crate::fast::run_fast;
use crate::limit::run_limit;
use crate::model::{
    fast_reaction_rhs, limit_toxicity_source, reaction_h, ModelParams, TransitionPair,
};
use crate::trajectory::{Snapshot, TimeGrid};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSetup {
    /// Constant initial value `(r1, r2, s)`; the limit run starts from
    /// `(r1 + r2, s)`.
    pub initial: (f64, f64, f64),
    pub epsilons: Vec<f64>,
    pub t_final: f64,
    pub snapshot_count: usize,
    pub rk4_dt: f64,
    pub pde_dt: f64,
    pub tolerance: f64,
}

impl Default for OracleSetup {
    fn default() -> Self {
        Self {
            initial: (1.0, 1.0, 1.0),
            epsilons: vec![1.0, 0.1],
            t_final: 1.0,
            snapshot_count: 101,
            rk4_dt: 1e-6,
            pde_dt: 1e-5,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub system: &'static str,
    pub epsilon: Option<f64>,
    /// Largest `|PDE - ODE|` over snapshots, nodes and fields.
    pub max_discrepancy: f64,
    /// Largest spatial spread `max - min` of any PDE field.
    pub max_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub entries: Vec<OracleEntry>,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.max_discrepancy < self.tolerance)
    }

    pub fn checks(&self) -> Vec<Check> {
        self.entries
            .iter()
            .map(|e| {
                let name = match e.epsilon {
                    Some(eps) => format!("oracle {} eps={eps}", e.system),
                    None => format!("oracle {}", e.system),
                };
                Check::new(
                    name,
                    e.max_discrepancy < self.tolerance,
                    format!(
                        "max discrepancy {:.3e} (tolerance {:.0e}), spatial spread {:.1e}",
                        e.max_discrepancy, self.tolerance, e.max_spread
                    ),
                )
            })
            .collect()
    }
}

/// Classical fourth-order Runge-Kutta with a fixed step. Returns the state at
/// every time in `outputs`, which must be nondecreasing and start at or after 0.
pub fn rk4<const N: usize, F>(
    y0: [f64; N],
    outputs: &[f64],
    dt: f64,
    rhs: F,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |y: &[f64; N], h: f64, k: &[f64; N]| -> [f64; N] {
        std::array::from_fn(|i| y[i] + h * k[i])
    };
    let mut y = y0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(outputs.len());
    for &target in outputs {
        let span = target - t;
        let steps = (span / dt - 1e-9).ceil().max(0.0) as u64;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(&y)?;
                let k2 = rhs(&axpy(&y, 0.5 * h, &k1))?;
                let k3 = rhs(&axpy(&y, 0.5 * h, &k2))?;
                let k4 = rhs(&axpy(&y, h, &k3))?;
                y = std::array::from_fn(|i| {
                    y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                });
            }
        }
        t = target;
        out.push(y);
    }
    Ok(out)
}

/// ODE reduction of the epsilon-system.
pub fn fast_ode<'a>(
    params: &'a ModelParams,
    pair: &TransitionPair,
) -> impl Fn(&[f64; 3]) -> Result<[f64; 3]> + 'a {
    let pair = *pair;
    move |y| {
        let (a, b, c) = fast_reaction_rhs(y[0], y[1], y[2].max(0.0), params, &pair)?;
        Ok([a, b, c])
    }
}

/// ODE reduction of the limiting system.
pub fn limit_ode<'a>(
    params: &'a ModelParams,
    pair: &TransitionPair,
) -> impl Fn(&[f64; 2]) -> Result<[f64; 2]> + 'a {
    let pair = *pair;
    move |y| {
        let s = y[1].max(0.0);
        let h = reaction_h(y[0], s, params, &pair)?;
        let src = limit_toxicity_source(y[0], s, params, &pair)?;
        Ok([h, src - params.rho * y[1]])
    }
}

fn compare<S: Snapshot, const N: usize>(frames: &[S], reference: &[[f64; N]]) -> (f64, f64) {
    let mut worst = 0.0_f64;
    let mut spread = 0.0_f64;
    for (frame, exact) in frames.iter().zip(reference) {
        for (field, &value) in frame.fields().iter().zip(exact.iter()) {
            let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max(hi - lo);
            for &v in field.iter() {
                worst = worst.max((v - value).abs());
            }
        }
    }
    (worst, spread)
}

/// Runs both PDE solvers from constant data and compares them with RK4.
pub fn run_homogeneous_oracle(
    config: &ExperimentConfig,
    setup: &OracleSetup,
) -> std::result::Result<OracleReport, HarnessError> {
    config.validate()?;
    let grid = config.grid()?;
    let time = TimeGrid::uniform(setup.t_final, setup.pde_dt, setup.snapshot_count)?;
    let (a, b, c) = setup.initial;
    let n = grid.len();
    let (r1, r2, s) = (vec![a; n], vec![b; n], vec![c; n]);
    let jobs: Vec<Option<f64>> = setup
        .epsilons
        .iter()
        .copied()
        .map(Some)
        .chain([None])
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&job| -> std::result::Result<OracleEntry, HarnessError> {
            let tag = HarnessError::solver(job);
            let (max_discrepancy, max_spread) = match job {
                Some(eps) => {
                    let params = config.params_at(eps);
                    let pde = run_fast(&params, &config.pair, &grid, (&r1, &r2, &s), &time);
                    let ode = rk4(
                        [a, b, c],
                        &time.snapshots,
                        setup.rk4_dt,
                        fast_ode(&params, &config.pair),
                    );
                    compare(
                        &pde.map_err(tag)?.frames,
                        &ode.map_err(HarnessError::solver(job))?,
                    )
                }
                None => {
                    let r0 = vec![a + b; n];
                    let pde = run_limit(&config.params, &config.pair, &grid, (&r0, &s), &time);
                    let ode = rk4(
                        [a + b, c],
                        &time.snapshots,
                        setup.rk4_dt,
                        limit_ode(&config.params, &config.pair),
                    );
                    compare(
                        &pde.map_err(tag)?.frames,
                        &ode.map_err(HarnessError::solver(job))?,
                    )
                }
            };
            Ok(OracleEntry {
                system: if job.is_some() { "fast" } else { "limit" },
                epsilon: job,
                max_discrepancy,
                max_spread,
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;

    Ok(OracleReport {
        entries,
        tolerance: setup.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_exponential() {
        let out = rk4([1.0], &[0.0, 0.5, 1.0], 1e-2, |y| Ok([-y[0]])).unwrap();
        assert_eq!(out[0], [1.0]);
        assert!((out[2][0] - (-1.0_f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn inert_kinetics_on_manifold_are_exact() {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.n = 16;
        cfg.params.gamma1 = 0.0;
        cfg.params.gamma2 = 0.0;
        cfg.params.eta1 = 0.0;
        cfg.params.eta2 = 0.0;
        cfg.params.mu = 0.0;
        cfg.params.rho = 0.0;
        // f(1) = 1 and g(1) = 1/2 for Power{1, -1}, so (1, 2, 1) is on the manifold.
        let setup = OracleSetup {
            initial: (1.0, 2.0, 1.0),
            pde_dt: 1e-2,
            rk4_dt: 1e-3,
            ..OracleSetup::default()
        };
        let report = run_homogeneous_oracle(&cfg, &setup).unwrap();
        assert_eq!(report.entries.len(), 3);
        for e in &report.entries {
            assert!(e.max_discrepancy < 1e-10, "{e:?}");
        }
        assert!(report.passed());
    }
}
