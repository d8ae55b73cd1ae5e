//! Numerical solvers and diagnostics for a root-toxicity reaction-diffusion
//! model with a fast exchange between healthy and exposed roots, and for its
//! fast-reaction limit.
//!
//! * [`fast`] integrates the epsilon-system for `(R1, R2, S)`.
//! * [`limit`] integrates the limiting cross-diffusion system for `(R, S)`.
//! * [`diagnostics`] measures the distance between the two.
//! * [`harness`] runs the epsilon sweep and the validation studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fast;
pub mod grid;
pub mod harness;
pub mod limit;
pub mod model;
pub mod trajectory;

pub use diagnostics::{
    energy_ep, fit_rate, lp_space_norm, lp_spacetime_norm, manifold_residual, negative_norm,
    qp_density, qp_residual_norm, trajectory_error, NormExponent, NormSeries, RateFit,
    TrajectoryError,
};
pub use error::{Error, Result};
pub use fast::{run_fast, step_fast, FastState, FastStepper};
pub use grid::{
    apply_neumann_laplacian, quad_trapezoid, solve_backward_euler_diffusion, solve_shifted_poisson,
    solve_variable_product_diffusion, Grid1D, TridiagonalFactor, TridiagonalOperator,
};
pub use harness::{ExperimentConfig, HarnessError, SweepRecord};
pub use limit::{reconstruct_components, run_limit, step_limit, LimitState, LimitStepper};
pub use model::{
    effective_diffusion, eval_transition, xi_split, ModelParams, Rates, TransitionPair,
};
pub use trajectory::{RunStats, Snapshot, TimeGrid, Trajectory};
