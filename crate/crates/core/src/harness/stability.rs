//! Response of the limiting system to a constant shift of its initial data.

use super::config::{ConfigError, ExperimentConfig};
use super::initial::make_initial;
use super::{Check, HarnessError};
use crate::grid::trapezoid;
use crate::limit::{run_limit, LimitState};
use crate::trajectory::Trajectory;

/// Largest admissible response-ratio spread across the probed shifts.
pub const MAX_RATIO_SPREAD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEntry {
    pub delta: f64,
    /// `||(R~, S~) - (R, S)||_{L^2(Omega_T)} / delta`.
    pub ratio: f64,
    pub ratio_r: f64,
    pub ratio_s: f64,
    /// `ratio` divided by `sqrt(|Omega_T|) = sqrt(L T)`.
    pub ratio_rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub entries: Vec<StabilityEntry>,
}

impl StabilityReport {
    /// `max ratio / min ratio` over the probed shifts.
    pub fn spread(&self) -> f64 {
        let ratios = self.entries.iter().map(|e| e.ratio);
        let hi = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.fold(f64::INFINITY, f64::min);
        hi / lo
    }

    pub fn passed(&self) -> bool {
        self.spread() < MAX_RATIO_SPREAD
    }

    pub fn checks(&self) -> Vec<Check> {
        let detail = self
            .entries
            .iter()
            .map(|e| {
                format!(
                    "delta={:e}: ratio {:.6} (rms {:.6})",
                    e.delta, e.ratio, e.ratio_rms
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        vec![Check::new(
            "stability probe",
            self.passed(),
            format!(
                "spread {:.4} (limit {MAX_RATIO_SPREAD}); {detail}",
                self.spread()
            ),
        )]
    }
}

/// Space-time `L^2` norms of the R and S differences.
fn difference_norms(a: &Trajectory<LimitState>, b: &Trajectory<LimitState>) -> (f64, f64) {
    let dx = a.grid.dx();
    let sq = |x: &[f64], y: &[f64]| -> f64 {
        let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).collect();
        trapezoid(&d, dx)
    };
    let r: Vec<f64> = a
        .frames
        .iter()
        .zip(&b.frames)
        .map(|(p, q)| sq(&p.r, &q.r))
        .collect();
    let s: Vec<f64> = a
        .frames
        .iter()
        .zip(&b.frames)
        .map(|(p, q)| sq(&p.s, &q.s))
        .collect();
    let in_time = |v: &[f64]| -> f64 {
        a.times
            .windows(2)
            .zip(v.windows(2))
            .map(|(t, w)| 0.5 * (t[1] - t[0]) * (w[0] + w[1]))
            .sum::<f64>()
    };
    (in_time(&r), in_time(&s))
}

/// Shifts probed for a given largest shift: `delta`, `delta / 10`, `delta / 100`.
pub fn probe_deltas(delta: f64) -> [f64; 3] {
    [delta, delta / 10.0, delta / 100.0]
}

pub fn run_stability_probe(
    config: &ExperimentConfig,
    delta: f64,
) -> Result<StabilityReport, HarnessError> {
    config.validate()?;
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(ConfigError::Invariant(format!(
            "perturbation size must lie in (0, 0.1], got {delta}"
        ))
        .into());
    }
    let grid = config.grid()?;
    let time = config.time_grid()?;
    let (r10, r20, s0) = make_initial(&grid);
    let r0: Vec<f64> = r10.iter().zip(&r20).map(|(a, b)| a + b).collect();
    let base = run_limit(&config.params, &config.pair, &grid, (&r0, &s0), &time)?;
    let volume = (grid.length() * time.t_final).sqrt();

    let entries = probe_deltas(delta)
        .iter()
        .map(|&d| {
            let r: Vec<f64> = r0.iter().map(|v| v + d).collect();
            let s: Vec<f64> = s0.iter().map(|v| v + d).collect();
            let shifted = run_limit(&config.params, &config.pair, &grid, (&r, &s), &time)?;
            let (nr, ns) = difference_norms(&shifted, &base);
            let ratio = (nr + ns).sqrt() / d;
            Ok(StabilityEntry {
                delta: d,
                ratio,
                ratio_r: nr.sqrt() / d,
                ratio_s: ns.sqrt() / d,
                ratio_rms: ratio / volume,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(StabilityReport { entries })
}
