//! Uniform vertex-centred grid on `(0, L)`, the Neumann Laplacian and the
//! tridiagonal solves built from it.
//!
//! Homogeneous Neumann conditions are imposed by ghost reflection
//! (`u[-1] = u[1]`, `u[n] = u[n-2]`), which keeps constants in the exact null
//! space of the discrete operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    length: f64,
    n: usize,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 3 nodes, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid length must be positive, got {length}"
            )));
        }
        let dx = length / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        nodes[n - 1] = length;
        Ok(Self {
            length,
            n,
            dx,
            nodes,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Samples `f` at every node.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Trapezoid weights: `dx` inside, `dx/2` at both ends.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: u.len(),
            });
        }
        Ok(())
    }
}

/// A tridiagonal matrix stored by diagonals.
///
/// `lower[i]` sits at row `i + 1`, column `i`; `upper[i]` at row `i`,
/// column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty tridiagonal operator".into()));
        }
        for band in [&lower, &upper] {
            if band.len() + 1 != n {
                return Err(Error::LengthMismatch {
                    expected: n - 1,
                    actual: band.len(),
                });
            }
        }
        Ok(Self { lower, diag, upper })
    }

    /// `I - dt * Lap_h * diag(coeff)`, i.e. the backward-Euler matrix of
    /// `v_t = Lap(a v)` with the product taken before differencing.
    /// A constant `coeff` gives the ordinary heat operator. `shift` is added to
    /// the diagonal (scaled by `dt`) for implicit linear decay.
    pub fn implicit_product_diffusion(
        grid: &Grid1D,
        coeff: &[f64],
        dt: f64,
        shift: f64,
    ) -> Result<Self> {
        grid.check(coeff)?;
        let n = grid.len();
        let k = dt / (grid.dx() * grid.dx());
        let diag: Vec<f64> = coeff
            .iter()
            .map(|&a| 1.0 + 2.0 * k * a + dt * shift)
            .collect();
        let mut upper: Vec<f64> = coeff[1..].iter().map(|&a| -k * a).collect();
        let mut lower: Vec<f64> = coeff[..n - 1].iter().map(|&a| -k * a).collect();
        // Ghost reflection doubles the single interior neighbour at each end.
        upper[0] *= 2.0;
        lower[n - 2] *= 2.0;
        Self::new(lower, diag, upper)
    }

    /// `zeta I - Lap_h`, the negated shifted Neumann Laplacian.
    pub fn shifted_neumann(grid: &Grid1D, zeta: f64) -> Result<Self> {
        let ones = vec![1.0; grid.len()];
        let mut op = Self::implicit_product_diffusion(grid, &ones, 1.0, zeta)?;
        op.diag.iter_mut().for_each(|d| *d -= 1.0);
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            let lo = if i > 0 { self.lower[i - 1].abs() } else { 0.0 };
            let up = if i + 1 < n { self.upper[i].abs() } else { 0.0 };
            self.diag[i].abs() >= lo + up
        })
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: v.len(),
            });
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.lower[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * v[i + 1];
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Thomas sweep. The matrices assembled in this module are nonsingular
    /// M-matrices, so elimination without pivoting keeps every pivot positive.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: rhs.len(),
            });
        }
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 {
            return Err(Error::NonFinite("tridiagonal pivot"));
        }
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        x[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if pivot == 0.0 {
                return Err(Error::NonFinite("tridiagonal pivot"));
            }
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            x[i] = (rhs[i] - self.lower[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal solution"));
        }
        Ok(x)
    }
}

/// LU factors of a [`TridiagonalOperator`] for repeated solves.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    lower: Vec<f64>,
    c: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn factor(&self) -> Result<TridiagonalFactor> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i - 1] * c[i - 1]
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::NonFinite("tridiagonal pivot"));
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                c[i] = self.upper[i] * inv_pivot[i];
            }
        }
        Ok(TridiagonalFactor {
            lower: self.lower.clone(),
            c,
            inv_pivot,
        })
    }
}

impl TridiagonalFactor {
    /// Overwrites `x` (holding the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.inv_pivot.len();
        if x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i - 1] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
        Ok(())
    }
}

/// Second difference with Neumann ghost reflection.
pub fn apply_neumann_laplacian(u: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    grid.check(u)?;
    let n = grid.len();
    let inv = 1.0 / (grid.dx() * grid.dx());
    let mut out = Vec::with_capacity(n);
    out.push(2.0 * (u[1] - u[0]) * inv);
    for i in 1..n - 1 {
        out.push((u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv);
    }
    out.push(2.0 * (u[n - 2] - u[n - 1]) * inv);
    Ok(out)
}

fn finite(name: &'static str, u: &[f64]) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

/// Solves `(Lap_h - zeta) u = phi` with Neumann conditions.
pub fn solve_shifted_poisson(phi: &[f64], zeta: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "shift zeta must be positive, got {zeta}"
        )));
    }
    grid.check(phi)?;
    finite("shifted Poisson right-hand side", phi)?;
    let op = TridiagonalOperator::shifted_neumann(grid, zeta)?;
    let rhs: Vec<f64> = phi.iter().map(|v| -v).collect();
    op.solve(&rhs)
}

/// One backward-Euler step of `u_t = d Lap u + source`:
/// solves `(I - dt d Lap_h) v = u + dt source`.
pub fn solve_backward_euler_diffusion(
    u: &[f64],
    d: f64,
    dt: f64,
    grid: &Grid1D,
    source: &[f64],
) -> Result<Vec<f64>> {
    implicit_diffusion_step(u, &vec![d; grid.len()], dt, 0.0, grid, source)
}

/// One backward-Euler step of `u_t = Lap(a u) + source`, the product form
/// of the limiting cross-diffusion.
pub fn solve_variable_product_diffusion(
    u: &[f64],
    a: &[f64],
    dt: f64,
    grid: &Grid1D,
    source: &[f64],
) -> Result<Vec<f64>> {
    if let Some(bad) = a.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "diffusion coefficient must stay positive, got {bad}"
        )));
    }
    implicit_diffusion_step(u, a, dt, 0.0, grid, source)
}

/// Shared kernel: `(I - dt Lap_h diag(a) + dt shift) v = u + dt source`.
pub(crate) fn implicit_diffusion_step(
    u: &[f64],
    a: &[f64],
    dt: f64,
    shift: f64,
    grid: &Grid1D,
    source: &[f64],
) -> Result<Vec<f64>> {
    grid.check(u)?;
    grid.check(source)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if a.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "diffusion coefficient must be finite and nonnegative".into(),
        ));
    }
    finite("diffusion input", u)?;
    finite("diffusion source", source)?;
    let op = TridiagonalOperator::implicit_product_diffusion(grid, a, dt, shift)?;
    let rhs: Vec<f64> = u.iter().zip(source).map(|(&x, &s)| x + dt * s).collect();
    op.solve(&rhs)
}

/// Composite trapezoid rule over the grid.
pub fn quad_trapezoid(u: &[f64], grid: &Grid1D) -> Result<f64> {
    grid.check(u)?;
    Ok(trapezoid(u, grid.dx()))
}

#[inline]
pub(crate) fn trapezoid(u: &[f64], dx: f64) -> f64 {
    let n = u.len();
    let inner: f64 = u[1..n - 1].iter().sum();
    dx * (inner + 0.5 * (u[0] + u[n - 1]))
}
