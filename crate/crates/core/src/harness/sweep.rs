//! The epsilon sweep: one shared limit run, one fast run per epsilon.

use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::initial::make_initial;
use super::output::{FitSummary, RatesFile};
use super::{Check, HarnessError};
use crate::diagnostics::{fit_rate, negative_norm, trajectory_error, NormSeries, RateFit};
use crate::fast::run_fast;
use crate::limit::{run_limit, LimitState};
use crate::trajectory::{Snapshot, Trajectory};

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub err_r_l2: f64,
    pub err_s_l2: f64,
    pub manifold_residual_l2: f64,
    pub negative_norm_final: f64,
    pub wall_time_seconds: f64,
}

/// Everything measured for one epsilon beyond its CSV row.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub series_r: NormSeries,
    pub series_s: NormSeries,
    /// Smallest value of any field over all snapshots.
    pub min_value: f64,
    /// `min_t (min_x S(t) - e^{-rho t} inf S0)`.
    pub toxicity_floor_margin: f64,
    pub accepted_steps: u64,
    pub halvings: u64,
}

#[derive(Debug, Clone)]
pub struct LimitSummary {
    pub min_value: f64,
    pub toxicity_floor_margin: f64,
    pub max_r: f64,
    /// `max(R_hat, max R0)`.
    pub r_bound: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub points: Vec<SweepPoint>,
    pub limit: LimitSummary,
    pub rate_r: Option<RateFit>,
    pub rate_s: Option<RateFit>,
    pub rate_manifold: Option<RateFit>,
    pub drop_preasymptotic: usize,
}

fn toxicity_floor_margin<F: Snapshot>(traj: &Trajectory<F>, rho: f64, inf_s0: f64) -> f64 {
    traj.frames
        .iter()
        .map(|f| {
            let min_s = f.toxicity().iter().copied().fold(f64::INFINITY, f64::min);
            min_s - (-rho * f.time()).exp() * inf_s0
        })
        .fold(f64::INFINITY, f64::min)
}

fn max_total_roots(traj: &Trajectory<LimitState>) -> f64 {
    traj.frames
        .iter()
        .flat_map(|f| f.r.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the sweep described by `config`. Nothing is written to disk; see
/// [`super::output::write_sweep_outputs`].
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome, HarnessError> {
    config.validate()?;
    let grid = config.grid()?;
    let time = config.time_grid()?;
    let (r10, r20, s0) = make_initial(&grid);
    let r0: Vec<f64> = r10.iter().zip(&r20).map(|(a, b)| a + b).collect();
    let inf_s0 = s0.iter().copied().fold(f64::INFINITY, f64::min);
    let rho = config.params.rho;
    let p = config.diagnostics.p_norm;
    let zeta = config.diagnostics.zeta;

    let limit = run_limit(&config.params, &config.pair, &grid, (&r0, &s0), &time)
        .map_err(HarnessError::solver(None))?;
    let max_r0 = r0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let limit_summary = LimitSummary {
        min_value: limit.min_value(),
        toxicity_floor_margin: toxicity_floor_margin(&limit, rho, inf_s0),
        max_r: max_total_roots(&limit),
        r_bound: config.params.r_hat.max(max_r0),
    };

    let results: Vec<(SweepRecord, SweepPoint)> = config
        .sweep
        .par_iter()
        .map(|&eps| {
            let tag = HarnessError::solver(Some(eps));
            let start = Instant::now();
            let params = config.params_at(eps);
            let fast = run_fast(&params, &config.pair, &grid, (&r10, &r20, &s0), &time);
            let fast = fast.map_err(HarnessError::solver(Some(eps)))?;
            let diff = trajectory_error(&fast, &limit, p);
            let diff = diff.map_err(HarnessError::solver(Some(eps)))?;
            let residual_sq = fast.stats.exchange_residual_sq.unwrap_or(0.0);
            let final_diff: Vec<f64> = fast
                .final_frame()
                .total()
                .iter()
                .zip(&limit.final_frame().r)
                .map(|(a, b)| a - b)
                .collect();
            let neg = negative_norm(&final_diff, zeta, &grid).map_err(tag)?;
            let wall = start.elapsed().as_secs_f64().max(1e-9);
            let record = SweepRecord {
                epsilon: eps,
                err_r_l2: diff.err_r,
                err_s_l2: diff.err_s,
                manifold_residual_l2: residual_sq.max(0.0).sqrt(),
                negative_norm_final: neg,
                wall_time_seconds: wall,
            };
            let point = SweepPoint {
                series_r: diff.series_r,
                series_s: diff.series_s,
                min_value: fast.min_value(),
                toxicity_floor_margin: toxicity_floor_margin(&fast, rho, inf_s0),
                accepted_steps: fast.stats.accepted_steps,
                halvings: fast.stats.halvings,
            };
            Ok((record, point))
        })
        .collect::<Result<_, HarnessError>>()?;
    let (records, points): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let eps: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
    let drop = config.diagnostics.drop_preasymptotic;
    let fit = |values: Vec<f64>| fit_rate(&eps, &values, drop).ok();
    Ok(SweepOutcome {
        rate_r: fit(records.iter().map(|r| r.err_r_l2).collect()),
        rate_s: fit(records.iter().map(|r| r.err_s_l2).collect()),
        rate_manifold: fit(records.iter().map(|r| r.manifold_residual_l2).collect()),
        records,
        points,
        limit: limit_summary,
        drop_preasymptotic: drop,
    })
}

/// Acceptance bands applied to a sweep.
pub mod bands {
    pub const RATE_MIN: f64 = 0.35;
    pub const RATE_MAX: f64 = 0.65;
    pub const MIN_R_SQUARED: f64 = 0.95;
    pub const MONOTONE_SLACK: f64 = 1.05;
    pub const FLOOR_TOLERANCE: f64 = 1e-6;
    pub const CEILING_FACTOR: f64 = 1.01;
    pub const POSITIVITY_TOLERANCE: f64 = -1e-12;
}

fn rate_check(name: &str, fit: Option<&RateFit>, need_r2: bool) -> Check {
    match fit {
        None => Check::new(name, false, "not enough sweep points to fit a rate"),
        Some(f) => {
            let in_band = (bands::RATE_MIN..=bands::RATE_MAX).contains(&f.slope);
            let r2_ok = !need_r2 || f.r_squared >= bands::MIN_R_SQUARED;
            Check::new(
                name,
                in_band && r2_ok,
                format!(
                    "slope {:.4} (band [{}, {}]), r^2 {:.4}",
                    f.slope,
                    bands::RATE_MIN,
                    bands::RATE_MAX,
                    f.r_squared
                ),
            )
        }
    }
}

/// Index pairs `(k, k+1)` where the error grows by more than the slack.
pub fn monotonicity_violations(values: &[f64]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > bands::MONOTONE_SLACK * w[0])
        .map(|(k, _)| k)
        .collect()
}

impl SweepOutcome {
    pub fn epsilons(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.epsilon).collect()
    }

    pub fn rates_file(&self) -> RatesFile {
        RatesFile {
            err_r: self.rate_r.map(FitSummary::from),
            err_s: self.rate_s.map(FitSummary::from),
            manifold: self.rate_manifold.map(FitSummary::from),
            epsilons: self.epsilons(),
            drop_preasymptotic: self.drop_preasymptotic,
        }
    }

    /// Pass/fail judgement of the sweep-level properties.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = vec![
            rate_check("err_R rate", self.rate_r.as_ref(), true),
            rate_check("err_S rate", self.rate_s.as_ref(), true),
            rate_check("manifold residual rate", self.rate_manifold.as_ref(), false),
        ];

        let err_r: Vec<f64> = self.records.iter().map(|r| r.err_r_l2).collect();
        let err_s: Vec<f64> = self.records.iter().map(|r| r.err_s_l2).collect();
        let (vr, vs) = (
            monotonicity_violations(&err_r),
            monotonicity_violations(&err_s),
        );
        out.push(Check::new(
            "monotone error decay",
            vr.is_empty() && vs.is_empty(),
            format!("violations at adjacent pairs: err_R {vr:?}, err_S {vs:?}"),
        ));

        let worst_floor = self
            .points
            .iter()
            .map(|p| p.toxicity_floor_margin)
            .fold(self.limit.toxicity_floor_margin, f64::min);
        out.push(Check::new(
            "toxicity lower bound",
            worst_floor >= -bands::FLOOR_TOLERANCE,
            format!("smallest margin min S - e^(-rho t) inf S0 = {worst_floor:.3e}"),
        ));

        let ceiling = self.limit.r_bound * bands::CEILING_FACTOR;
        out.push(Check::new(
            "L-infinity ceiling",
            self.limit.max_r <= ceiling,
            format!("max R = {:.6}, ceiling {:.6}", self.limit.max_r, ceiling),
        ));

        let worst_min = self
            .points
            .iter()
            .map(|p| p.min_value)
            .fold(self.limit.min_value, f64::min);
        out.push(Check::new(
            "positivity",
            worst_min >= bands::POSITIVITY_TOLERANCE,
            format!("smallest field value {worst_min:.3e}"),
        ));

        let finite = self.records.iter().all(|r| {
            [
                r.err_r_l2,
                r.err_s_l2,
                r.manifold_residual_l2,
                r.negative_norm_final,
                r.wall_time_seconds,
            ]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        });
        out.push(Check::new(
            "records finite and nonnegative",
            finite,
            format!("{} records", self.records.len()),
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.n = 32;
        cfg.time.t_final = 0.2;
        cfg.time.dt = 1e-2;
        cfg.time.snapshot_count = 5;
        cfg.sweep = vec![1.0, 0.1, 0.01];
        cfg
    }

    #[test]
    fn small_sweep_records_everything() {
        let out = run_sweep(&small_config()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.points.len(), 3);
        for (r, p) in out.records.iter().zip(&out.points) {
            assert!(r.err_r_l2.is_finite() && r.err_r_l2 > 0.0);
            assert!(r.manifold_residual_l2 > 0.0);
            assert!(r.wall_time_seconds > 0.0);
            assert_eq!(p.series_r.values.len(), 5);
            assert_eq!(p.series_r.values[0], 0.0);
        }
        assert!(out.rate_r.is_some());
        assert_eq!(out.rate_r.unwrap().points_used, 2);
    }

    #[test]
    fn single_epsilon_smoke() {
        let mut cfg = small_config();
        cfg.sweep = vec![1e6];
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.records[0].err_r_l2.is_finite());
        assert!(out.rate_r.is_none());
        let rates = out.rates_file();
        let json = serde_json::to_value(&rates).unwrap();
        assert!(json["err_R"].is_null());
    }

    #[test]
    fn solver_errors_are_tagged_with_epsilon() {
        let mut cfg = small_config();
        cfg.pair = crate::model::TransitionPair::Saturation { s_hat: 1.8 };
        let err = run_sweep(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), super::super::exit::SOLVER_FAILURE);
    }

    #[test]
    fn monotonicity_slack() {
        assert!(monotonicity_violations(&[1.0, 1.04, 0.5]).is_empty());
        assert_eq!(monotonicity_violations(&[1.0, 0.5, 0.6]), vec![1]);
    }
}
