//! Self-convergence in space and time at a fixed epsilon.
//!
//! Successive refinements are compared pairwise. Vertex grids with `n` and
//! `2n` nodes are not nested, so the finer solution is sampled at the coarse
//! nodes by four-point Lagrange interpolation, which is accurate to `O(h^4)`.

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::initial::make_initial;
use super::{Check, HarnessError};
use crate::fast::run_fast;
use crate::grid::{trapezoid, Grid1D};
use crate::limit::run_limit;
use crate::trajectory::{Snapshot, TimeGrid, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// The oscillatory experiment data.
    Experiment,
    /// `(1, 1, 1)` everywhere.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementSetup {
    pub epsilon: f64,
    pub node_counts: Vec<usize>,
    pub time_steps: Vec<f64>,
    pub initial: InitialKind,
    pub spatial_band: (f64, f64),
    pub temporal_band: (f64, f64),
    /// Differences below this are treated as zero.
    pub negligible: f64,
}

impl Default for RefinementSetup {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            node_counts: vec![64, 128, 256, 512],
            time_steps: vec![4e-3, 2e-3, 1e-3, 5e-4],
            initial: InitialKind::Experiment,
            spatial_band: (1.6, 2.4),
            temporal_band: (0.6, 1.4),
            negligible: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Fast,
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub solver: Solver,
    pub direction: Direction,
    /// Mesh width or time step of the coarser member of each compared pair.
    pub steps: Vec<f64>,
    /// `L^2(Omega_T)` size of `(R, S)` differences between neighbours.
    pub differences: Vec<f64>,
    /// `None` when every difference is negligible.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub studies: Vec<ConvergenceStudy>,
    pub setup: RefinementSetup,
}

impl RefinementReport {
    pub fn checks(&self) -> Vec<Check> {
        self.studies
            .iter()
            .map(|st| {
                let (lo, hi) = match st.direction {
                    Direction::Space => self.setup.spatial_band,
                    Direction::Time => self.setup.temporal_band,
                };
                let name =
                    format!("{:?} solver, {:?} order", st.solver, st.direction).to_lowercase();
                match st.order {
                    Some(p) => Check::new(
                        name,
                        (lo..=hi).contains(&p),
                        format!(
                            "order {p:.3} (band [{lo}, {hi}]), differences {}",
                            sci(&st.differences)
                        ),
                    ),
                    None => Check::new(
                        name,
                        true,
                        format!("not applicable, differences {}", sci(&st.differences)),
                    ),
                }
            })
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

fn sci(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", cells.join(", "))
}

/// Value at `x` of the cubic through the four grid values nearest to `x`.
pub fn interpolate_cubic(grid: &Grid1D, values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    let dx = grid.dx();
    let cell = ((x / dx).floor() as isize).clamp(0, n as isize - 1);
    let start = (cell - 1).clamp(0, n as isize - 4) as usize;
    let nodes = grid.nodes();
    (0..4)
        .map(|j| {
            let xj = nodes[start + j];
            let weight: f64 = (0..4)
                .filter(|&m| m != j)
                .map(|m| (x - nodes[start + m]) / (xj - nodes[start + m]))
                .product();
            weight * values[start + j]
        })
        .sum()
}

/// Space-time `L^2` norm of the `(R, S)` difference, measured on the grid of
/// `coarse` with `fine` interpolated onto it.
fn difference<S: Snapshot>(coarse: &Trajectory<S>, fine: &Trajectory<S>) -> f64 {
    let grid = &coarse.grid;
    let same_grid = coarse.grid == fine.grid;
    let sample = |values: &[f64]| -> Vec<f64> {
        if same_grid {
            values.to_vec()
        } else {
            grid.nodes()
                .iter()
                .map(|&x| interpolate_cubic(&fine.grid, values, x))
                .collect()
        }
    };
    let per_time: Vec<f64> = coarse
        .frames
        .iter()
        .zip(&fine.frames)
        .map(|(c, f)| {
            let dr: Vec<f64> = c
                .total_roots()
                .iter()
                .zip(sample(&f.total_roots()))
                .map(|(a, b)| (a - b).powi(2))
                .collect();
            let ds: Vec<f64> = c
                .toxicity()
                .iter()
                .zip(sample(f.toxicity()))
                .map(|(a, b)| (a - b).powi(2))
                .collect();
            trapezoid(&dr, grid.dx()) + trapezoid(&ds, grid.dx())
        })
        .collect();
    let dt = coarse.times.windows(2).map(|w| w[1] - w[0]);
    let integral: f64 = per_time
        .windows(2)
        .zip(dt)
        .map(|(w, h)| 0.5 * h * (w[0] + w[1]))
        .sum();
    integral.max(0.0).sqrt()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn study<S: Snapshot>(
    solver: Solver,
    direction: Direction,
    runs: &[Trajectory<S>],
    steps: &[f64],
    negligible: f64,
) -> ConvergenceStudy {
    let differences: Vec<f64> = runs.windows(2).map(|w| difference(&w[0], &w[1])).collect();
    let steps = steps[..differences.len()].to_vec();
    let order = if differences.iter().all(|d| *d < negligible) || differences.len() < 2 {
        None
    } else {
        Some(slope(&steps, &differences))
    };
    ConvergenceStudy {
        solver,
        direction,
        steps,
        differences,
        order,
    }
}

struct Case {
    n: usize,
    dt: f64,
}

pub fn run_refinement_study(
    config: &ExperimentConfig,
    setup: &RefinementSetup,
) -> Result<RefinementReport, HarnessError> {
    config.validate()?;
    if setup.node_counts.len() < 3 || setup.time_steps.len() < 3 {
        return Err(HarnessError::Config(super::ConfigError::Invariant(
            "a refinement study needs at least three levels in space and in time".into(),
        )));
    }
    let eps = setup.epsilon;
    let params = config.params_at(eps);
    let base_dt = config.time.dt;
    let base_n = config.grid.n;
    let cases: Vec<Case> = setup
        .node_counts
        .iter()
        .map(|&n| Case { n, dt: base_dt })
        .chain(setup.time_steps.iter().map(|&dt| Case { n: base_n, dt }))
        .collect();

    type Pair = (
        Trajectory<crate::fast::FastState>,
        Trajectory<crate::limit::LimitState>,
    );
    let runs: Vec<Pair> = cases
        .par_iter()
        .map(|case| -> Result<Pair, HarnessError> {
            let grid = Grid1D::new(config.grid.length, case.n)?;
            let time = TimeGrid::uniform(config.time.t_final, case.dt, config.time.snapshot_count)?;
            let (r1, r2, s) = match setup.initial {
                InitialKind::Experiment => make_initial(&grid),
                InitialKind::Constant => {
                    let one = vec![1.0; case.n];
                    (one.clone(), one.clone(), one)
                }
            };
            let r: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
            let fast = run_fast(&params, &config.pair, &grid, (&r1, &r2, &s), &time)
                .map_err(HarnessError::solver(Some(eps)))?;
            let limit = run_limit(&params, &config.pair, &grid, (&r, &s), &time)?;
            Ok((fast, limit))
        })
        .collect::<Result<_, _>>()?;

    let k = setup.node_counts.len();
    let (space, time) = runs.split_at(k);
    let (fast_space, limit_space): (Vec<_>, Vec<_>) = space.iter().cloned().unzip();
    let (fast_time, limit_time): (Vec<_>, Vec<_>) = time.iter().cloned().unzip();
    let widths: Vec<f64> = setup
        .node_counts
        .iter()
        .map(|&n| config.grid.length / (n - 1) as f64)
        .collect();
    let tol = setup.negligible;
    Ok(RefinementReport {
        studies: vec![
            study(Solver::Fast, Direction::Space, &fast_space, &widths, tol),
            study(Solver::Limit, Direction::Space, &limit_space, &widths, tol),
            study(
                Solver::Fast,
                Direction::Time,
                &fast_time,
                &setup.time_steps,
                tol,
            ),
            study(
                Solver::Limit,
                Direction::Time,
                &limit_time,
                &setup.time_steps,
                tol,
            ),
        ],
        setup: setup.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g = Grid1D::new(1.0, 11).unwrap();
        let p = |x: f64| 2.0 - x + 3.0 * x * x - 0.5 * x.powi(3);
        let v = g.map(p);
        for x in [0.0, 0.013, 0.5, 0.77, 0.999, 1.0] {
            assert!((interpolate_cubic(&g, &v, x) - p(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_data_orders_not_applicable() {
        let mut cfg = ExperimentConfig::default();
        cfg.time.t_final = 0.1;
        cfg.time.snapshot_count = 3;
        cfg.grid.n = 16;
        let setup = RefinementSetup {
            node_counts: vec![8, 16, 32],
            time_steps: vec![4e-2, 2e-2, 1e-2],
            initial: InitialKind::Constant,
            ..RefinementSetup::default()
        };
        let report = run_refinement_study(&cfg, &setup).unwrap();
        assert_eq!(report.studies.len(), 4);
        for st in &report.studies {
            if st.direction == Direction::Space {
                assert!(st.differences.iter().all(|d| *d < 1e-10), "{st:?}");
                assert_eq!(st.order, None);
            }
        }
    }
}
