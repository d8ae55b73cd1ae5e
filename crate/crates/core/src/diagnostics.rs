//! Norms, energies, residuals and rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fast::FastState;
use crate::grid::{solve_shifted_poisson, trapezoid, Grid1D};
use crate::model::{eval_transition, TransitionPair};
use crate::trajectory::{Snapshot, Trajectory};

/// Exponent of an `L^p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormExponent {
    Finite(f64),
    Infinity,
}

impl NormExponent {
    pub fn finite(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "norm exponent must be at least 1, got {p}"
            )));
        }
        Ok(NormExponent::Finite(p))
    }
}

impl From<f64> for NormExponent {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            NormExponent::Infinity
        } else {
            NormExponent::Finite(p)
        }
    }
}

/// A spatial norm per snapshot time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl NormSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFinite("norm series value"));
        }
        Ok(Self {
            times,
            values,
            label: label.into(),
        })
    }
}

/// Least-squares line through `(log10 eps, log10 err)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

pub fn lp_space_norm(u: &[f64], grid: &Grid1D, p: impl Into<NormExponent>) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: u.len(),
        });
    }
    match p.into() {
        NormExponent::Infinity => Ok(u.iter().fold(0.0, |m, v| m.max(v.abs()))),
        NormExponent::Finite(p) => {
            NormExponent::finite(p)?;
            let powered: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
            Ok(trapezoid(&powered, grid.dx()).powf(1.0 / p))
        }
    }
}

/// Discrete `L^p(Omega_T)` norm from a series of spatial `L^p` norms:
/// trapezoid in time of `||u(t)||^p`, then the `p`-th root.
///
/// A single snapshot spans no time and yields zero.
pub fn lp_spacetime_norm(series: &NormSeries, p: f64) -> Result<f64> {
    NormExponent::finite(p)?;
    let t = &series.times;
    if t.len() != series.values.len() {
        return Err(Error::Incompatible(
            "norm series times and values differ in length".into(),
        ));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Incompatible(
            "norm series times must be strictly increasing".into(),
        ));
    }
    let integral: f64 = t
        .windows(2)
        .zip(series.values.windows(2))
        .map(|(tw, vw)| 0.5 * (tw[1] - tw[0]) * (vw[0].powf(p) + vw[1].powf(p)))
        .sum();
    Ok(integral.powf(1.0 / p))
}

fn products(state: &FastState, pair: &TransitionPair) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::with_capacity(state.len());
    let mut b = Vec::with_capacity(state.len());
    for i in 0..state.len() {
        let rates = eval_transition(pair, state.s[i].max(0.0))?;
        a.push(rates.f * state.r1[i]);
        b.push(rates.g * state.r2[i]);
    }
    Ok((a, b))
}

fn check_state(state: &FastState, grid: &Grid1D) -> Result<()> {
    if state.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: state.len(),
        });
    }
    Ok(())
}

/// `int f(s)^(p-1) r1^p + g(s)^(p-1) r2^p`.
pub fn energy_ep(state: &FastState, pair: &TransitionPair, grid: &Grid1D, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "energy exponent must exceed 1, got {p}"
        )));
    }
    check_state(state, grid)?;
    let density = (0..state.len())
        .map(|i| {
            let rates = eval_transition(pair, state.s[i].max(0.0))?;
            Ok(rates.f.powf(p - 1.0) * state.r1[i].max(0.0).powf(p)
                + rates.g.powf(p - 1.0) * state.r2[i].max(0.0).powf(p))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(trapezoid(&density, grid.dx()))
}

/// Pointwise `(A^(p-1) - B^(p-1)) (A - B)` with `A = f r1`, `B = g r2`.
///
/// Nonnegative because `x -> x^(p-1)` is nondecreasing on `x >= 0`; tiny
/// negative roundoff in the densities is clamped first.
pub fn qp_density(a: f64, b: f64, p: f64) -> f64 {
    let (a, b) = (a.max(0.0), b.max(0.0));
    let ap = a.powf(p - 1.0);
    let bp = b.powf(p - 1.0);
    // Same-sign factors; computing the magnitudes keeps the product exactly >= 0.
    (ap - bp).abs() * (a - b).abs()
}

pub fn qp_residual_norm(
    state: &FastState,
    pair: &TransitionPair,
    grid: &Grid1D,
    p: f64,
) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "residual exponent must be at least 2, got {p}"
        )));
    }
    check_state(state, grid)?;
    let (a, b) = products(state, pair)?;
    let density: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| qp_density(x, y, p))
        .collect();
    Ok(trapezoid(&density, grid.dx()))
}

/// `|| f(s) r1 - g(s) r2 ||_p`, the distance to the critical manifold.
pub fn manifold_residual(
    state: &FastState,
    pair: &TransitionPair,
    grid: &Grid1D,
    p: impl Into<NormExponent>,
) -> Result<f64> {
    check_state(state, grid)?;
    let (a, b) = products(state, pair)?;
    let w: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    lp_space_norm(&w, grid, p)
}

/// Centred differences inside, one-sided at the two ends.
fn gradient(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    let mut g = Vec::with_capacity(n);
    g.push((u[1] - u[0]) / dx);
    for i in 1..n - 1 {
        g.push((u[i + 1] - u[i - 1]) / (2.0 * dx));
    }
    g.push((u[n - 1] - u[n - 2]) / dx);
    g
}

/// `(zeta ||U||^2 + ||grad U||^2)^(1/2)` with `U = (Lap - zeta)^(-1) u`,
/// an `H^-1`-type size of `u`.
pub fn negative_norm(u: &[f64], zeta: f64, grid: &Grid1D) -> Result<f64> {
    let big_u = solve_shifted_poisson(u, zeta, grid)?;
    let sq: Vec<f64> = big_u.iter().map(|v| v * v).collect();
    let grad_sq: Vec<f64> = gradient(&big_u, grid.dx()).iter().map(|v| v * v).collect();
    let total = zeta * trapezoid(&sq, grid.dx()) + trapezoid(&grad_sq, grid.dx());
    Ok(total.sqrt())
}

/// Differences between two trajectories on the same grid and snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryError {
    pub err_r: f64,
    pub err_s: f64,
    pub series_r: NormSeries,
    pub series_s: NormSeries,
}

pub fn trajectory_error<A: Snapshot, B: Snapshot>(
    first: &Trajectory<A>,
    second: &Trajectory<B>,
    p: f64,
) -> Result<TrajectoryError> {
    if first.grid != second.grid {
        return Err(Error::Incompatible("grids differ".into()));
    }
    if first.times != second.times {
        return Err(Error::Incompatible("snapshot times differ".into()));
    }
    let grid = &first.grid;
    let mut norms_r = Vec::with_capacity(first.times.len());
    let mut norms_s = Vec::with_capacity(first.times.len());
    for (a, b) in first.frames.iter().zip(&second.frames) {
        let dr: Vec<f64> = a
            .total_roots()
            .iter()
            .zip(b.total_roots().iter())
            .map(|(x, y)| x - y)
            .collect();
        let ds: Vec<f64> = a
            .toxicity()
            .iter()
            .zip(b.toxicity())
            .map(|(x, y)| x - y)
            .collect();
        norms_r.push(lp_space_norm(&dr, grid, p)?);
        norms_s.push(lp_space_norm(&ds, grid, p)?);
    }
    let series_r = NormSeries::new(
        first.times.clone(),
        norms_r,
        format!("L{p} norm of R difference"),
    )?;
    let series_s = NormSeries::new(
        first.times.clone(),
        norms_s,
        format!("L{p} norm of S difference"),
    )?;
    Ok(TrajectoryError {
        err_r: lp_spacetime_norm(&series_r, p)?,
        err_s: lp_spacetime_norm(&series_s, p)?,
        series_r,
        series_s,
    })
}

/// Fits `log10 err = slope * log10 eps + intercept` after discarding the
/// `drop_preasymptotic` largest `eps`.
pub fn fit_rate(epsilons: &[f64], errors: &[f64], drop_preasymptotic: usize) -> Result<RateFit> {
    if epsilons.len() != errors.len() {
        return Err(Error::RateFit(format!(
            "{} epsilons but {} errors",
            epsilons.len(),
            errors.len()
        )));
    }
    if epsilons
        .iter()
        .chain(errors)
        .any(|v| !(v.is_finite() && *v > 0.0))
    {
        return Err(Error::RateFit(
            "all inputs must be positive and finite".into(),
        ));
    }
    let mut points: Vec<(f64, f64)> = epsilons
        .iter()
        .copied()
        .zip(errors.iter().copied())
        .collect();
    points.sort_by(|a, b| b.0.total_cmp(&a.0));
    let kept = &points[drop_preasymptotic.min(points.len())..];
    if kept.len() < 2 {
        return Err(Error::RateFit(format!(
            "need at least 2 points after dropping {drop_preasymptotic}, have {}",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|(e, _)| e.log10()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, r)| r.log10()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("all epsilons are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    // A flat response is fitted perfectly by a horizontal line.
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points_used: kept.len(),
    })
}
