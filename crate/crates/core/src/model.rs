//! Continuous-model algebra: parameters, switching-rate functions, the
//! critical-manifold splitting and the pointwise reaction terms.
//!
//! Everything here is a pure function of scalars. Grid-level loops live in
//! the solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default lower bound on `f(s) + g(s)` before dividing by it.
pub const DEFAULT_MANIFOLD_FLOOR: f64 = 1e-12;

/// Physical and kinetic constants plus the time-scale `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d_r1: f64,
    pub d_r2: f64,
    pub d_s: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub mu: f64,
    pub rho: f64,
    pub r_hat: f64,
    pub epsilon: f64,
}

impl ModelParams {
    /// Parameter set used for the numerical experiments (L = 1 is a grid
    /// property and lives elsewhere).
    pub fn baseline(epsilon: f64) -> Self {
        Self {
            d_r1: 0.01,
            d_r2: 0.0021,
            d_s: 0.004,
            gamma1: 1.0,
            gamma2: 1.0,
            eta1: 1.0,
            eta2: 1.0,
            mu: 5.0,
            rho: 0.2,
            r_hat: 1.0,
            epsilon,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("d_R1", self.d_r1),
            ("d_R2", self.d_r2),
            ("d_S", self.d_s),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("mu", self.mu),
            ("rho", self.rho),
            ("R_hat", self.r_hat),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be strictly positive, got {}",
                self.epsilon
            )));
        }
        if self.d_r2 >= self.d_r1 {
            return Err(Error::InvalidParameter(format!(
                "exposed roots must diffuse slower than healthy roots: d_R2 = {} is not < d_R1 = {}",
                self.d_r2, self.d_r1
            )));
        }
        Ok(())
    }
}

/// The switching rates `f` (healthy to exposed) and `g` (exposed to healthy)
/// as functions of the toxicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransitionPair {
    /// `f(s) = s^p`, `g(s) = (1 + s)^q` with `q < 0 < p`.
    Power { p: f64, q: f64 },
    /// Ratios of affine functions, `f = (a1 s + b1)/(c1 s + d1)` and likewise for `g`.
    Holling {
        a1: f64,
        b1: f64,
        c1: f64,
        d1: f64,
        a2: f64,
        b2: f64,
        c2: f64,
        d2: f64,
    },
    /// `f(s) = s`, `g(s) = (s_hat - s)_+`.
    Saturation { s_hat: f64 },
}

impl Default for TransitionPair {
    fn default() -> Self {
        TransitionPair::Power { p: 1.0, q: -1.0 }
    }
}

/// Values and derivatives of a transition pair at one toxicity level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub f: f64,
    pub g: f64,
    pub fprime: f64,
    pub gprime: f64,
}

impl TransitionPair {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TransitionPair::Power { p, q } => {
                if !(p.is_finite() && q.is_finite() && p > 0.0 && q < 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power pair needs q < 0 < p, got p = {p}, q = {q}"
                    )));
                }
            }
            TransitionPair::Holling {
                a1,
                b1,
                c1,
                d1,
                a2,
                b2,
                c2,
                d2,
            } => {
                let coeffs = [a1, b1, c1, d1, a2, b2, c2, d2];
                if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
                    return Err(Error::InvalidParameter(
                        "holling coefficients must be finite and nonnegative".into(),
                    ));
                }
                if !(a2 * d2 - b2 * c2 < 0.0 && 0.0 < a1 * d1 - b1 * c1) {
                    return Err(Error::InvalidParameter(format!(
                        "holling pair needs a2*d2 - b2*c2 < 0 < a1*d1 - b1*c1, got {} and {}",
                        a2 * d2 - b2 * c2,
                        a1 * d1 - b1 * c1
                    )));
                }
                // Both denominators must stay positive on s >= 0.
                if d1 <= 0.0 || d2 <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "holling denominators must be positive at s = 0 (d1, d2 > 0)".into(),
                    ));
                }
            }
            TransitionPair::Saturation { s_hat } => {
                if !(s_hat.is_finite() && s_hat > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "saturation threshold must be positive, got {s_hat}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether `g` is strictly positive at every point of `s`.
    pub fn g_positive_on(&self, s: &[f64]) -> bool {
        match *self {
            TransitionPair::Saturation { s_hat } => s.iter().all(|&v| v < s_hat),
            _ => true,
        }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> Result<Rates> {
        eval_transition(self, s)
    }
}

/// Closed-form `f`, `g`, `f'`, `g'` at `s`.
///
/// At the saturation kink the derivative of `g` is taken from the right:
/// `0` for `s >= s_hat`, `-1` below it.
pub fn eval_transition(pair: &TransitionPair, s: f64) -> Result<Rates> {
    if !(s >= 0.0) {
        return Err(Error::NegativeToxicity(s));
    }
    let rates = match *pair {
        TransitionPair::Power { p, q } => Rates {
            f: s.powf(p),
            g: (1.0 + s).powf(q),
            fprime: p * s.powf(p - 1.0),
            gprime: q * (1.0 + s).powf(q - 1.0),
        },
        TransitionPair::Holling {
            a1,
            b1,
            c1,
            d1,
            a2,
            b2,
            c2,
            d2,
        } => {
            let den1 = c1 * s + d1;
            let den2 = c2 * s + d2;
            Rates {
                f: (a1 * s + b1) / den1,
                g: (a2 * s + b2) / den2,
                fprime: (a1 * d1 - b1 * c1) / (den1 * den1),
                gprime: (a2 * d2 - b2 * c2) / (den2 * den2),
            }
        }
        TransitionPair::Saturation { s_hat } => {
            if s >= s_hat {
                Rates {
                    f: s,
                    g: 0.0,
                    fprime: 1.0,
                    gprime: 0.0,
                }
            } else {
                Rates {
                    f: s,
                    g: s_hat - s,
                    fprime: 1.0,
                    gprime: -1.0,
                }
            }
        }
    };
    Ok(rates)
}

#[inline]
fn manifold_sum(pair: &TransitionPair, s: f64, floor: f64) -> Result<Rates> {
    let rates = eval_transition(pair, s)?;
    let sum = rates.f + rates.g;
    if !(sum >= floor) {
        return Err(Error::SingularManifold { s, sum, floor });
    }
    Ok(rates)
}

/// Splits total root density `r` into the healthy/exposed pair lying on the
/// critical manifold `f(s) r1 = g(s) r2`.
pub fn xi_split(r: f64, s: f64, pair: &TransitionPair) -> Result<(f64, f64)> {
    xi_split_with_floor(r, s, pair, DEFAULT_MANIFOLD_FLOOR)
}

pub fn xi_split_with_floor(
    r: f64,
    s: f64,
    pair: &TransitionPair,
    floor: f64,
) -> Result<(f64, f64)> {
    let Rates { f, g, .. } = manifold_sum(pair, s, floor)?;
    let xi1 = g * r / (f + g);
    // Complement keeps xi1 + xi2 == r to roundoff.
    let xi2 = r - xi1;
    Ok((xi1, xi2))
}

/// `a(s) = d_R1 - (d_R1 - d_R2) f/(f + g)`, the diffusion coefficient of the
/// total roots in the limiting system. Always in `[d_R2, d_R1]`.
pub fn effective_diffusion(s: f64, params: &ModelParams, pair: &TransitionPair) -> Result<f64> {
    let Rates { f, g, .. } = manifold_sum(pair, s, DEFAULT_MANIFOLD_FLOOR)?;
    let theta = f / (f + g);
    let a = params.d_r1 - (params.d_r1 - params.d_r2) * theta;
    Ok(a.clamp(params.d_r2, params.d_r1))
}

/// Net logistic growth minus mortality of the total roots on the manifold.
pub fn reaction_h(r: f64, s: f64, params: &ModelParams, pair: &TransitionPair) -> Result<f64> {
    let (xi1, xi2) = xi_split(r, s, pair)?;
    let headroom = params.r_hat - r;
    Ok(
        params.gamma1 * xi1 * headroom - params.eta1 * xi1 + params.gamma2 * xi2 * headroom
            - params.eta2 * xi2,
    )
}

/// Toxicity production `mu (eta1 xi1 + eta2 xi2)` on the manifold.
pub fn limit_toxicity_source(
    r: f64,
    s: f64,
    params: &ModelParams,
    pair: &TransitionPair,
) -> Result<f64> {
    let (xi1, xi2) = xi_split(r, s, pair)?;
    Ok(params.mu * (params.eta1 * xi1 + params.eta2 * xi2))
}

/// Exchange flux `f(s) r1 - g(s) r2`, without the `1/epsilon` factor.
#[inline]
pub fn fast_exchange(r1: f64, r2: f64, s: f64, pair: &TransitionPair) -> Result<f64> {
    let Rates { f, g, .. } = eval_transition(pair, s)?;
    Ok(f * r1 - g * r2)
}

/// Reaction rates that do not involve the fast exchange: logistic growth and
/// mortality of both root types, and toxicity production. Toxicity decay is
/// excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowRates {
    pub dr1: f64,
    pub dr2: f64,
    pub s_source: f64,
}

#[inline]
pub fn slow_rates(r1: f64, r2: f64, params: &ModelParams) -> SlowRates {
    let headroom = params.r_hat - (r1 + r2);
    SlowRates {
        dr1: params.gamma1 * r1 * headroom - params.eta1 * r1,
        dr2: params.gamma2 * r2 * headroom - params.eta2 * r2,
        s_source: params.mu * (params.eta1 * r1 + params.eta2 * r2),
    }
}

/// Full pointwise right-hand side of the epsilon-system, diffusion excluded.
pub fn fast_reaction_rhs(
    r1: f64,
    r2: f64,
    s: f64,
    params: &ModelParams,
    pair: &TransitionPair,
) -> Result<(f64, f64, f64)> {
    let w = fast_exchange(r1, r2, s, pair)? / params.epsilon;
    let slow = slow_rates(r1, r2, params);
    Ok((slow.dr1 - w, slow.dr2 + w, slow.s_source - params.rho * s))
}
