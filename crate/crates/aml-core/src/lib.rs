//! Simulation-based estimation toolkit built around constrained pseudo-score
//! matching.
//!
//! The estimation idea: a structural model with an intractable likelihood is
//! approximated by a constrained sub-model whose log-likelihood (and a
//! full-dimensional pseudo-score vector) is cheap to evaluate. The constrained
//! fit is biased for the structural parameters, but matching the observed
//! pseudo-score against its average over simulated paths erases that bias and
//! recovers nearly-efficient point estimates.
//!
//! Crate layout:
//! - [`numerics`]: seeded splittable RNG streams, derivative-free and
//!   quasi-Newton optimizers, finite differences, adaptive quadrature and
//!   Bartlett long-run variance estimation.
//! - [`engine`]: the model-agnostic estimator — model contract, constrained
//!   fit, score-matching criterion and solver, sandwich covariance,
//!   parametric bootstrap.
//! - [`models`]: generalized Tobit with logistic selection, binomial
//!   multifractal volatility (with particle-filter forecasting),
//!   stable distributions, an ARCH-like stochastic volatility model and an
//!   autoregressive-error probit.
//! - [`ml`]: exact maximum-likelihood baselines where feasible.
//! - [`harness`]: configuration-driven Monte Carlo, empirical-fit, backtest
//!   and timing experiments with CSV/JSON emission.

pub mod engine;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod ml;
pub mod models;
pub mod numerics;
pub mod stats;

pub use engine::{
    constrained_fit, parametric_bootstrap, solve_aml, solve_aml_at, Dataset, EstimationResult,
    Model, ParamVector, SimBank, SolveOptions,
};
pub use error::{AmlError, Result};

/// Version string stamped on every emitted table row.
pub const TOOLKIT_VERSION: &str = concat!("aml-toolkit ", env!("CARGO_PKG_VERSION"));
