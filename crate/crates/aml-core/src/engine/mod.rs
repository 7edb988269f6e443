//! Model-agnostic estimation engine.
//!
//! The estimator works in two stages. A *constrained fit* maximizes the
//! tractable log-likelihood of the model restricted to the constrained set,
//! producing `beta_hat`. The *score-matching solve* then finds the structural
//! `theta_hat` at which the average pseudo-score of simulated paths,
//! evaluated at `beta_hat`, reproduces the observed pseudo-score at
//! `beta_hat`. A sandwich covariance and a parametric bootstrap quantify the
//! sampling uncertainty.

mod bootstrap;
mod criterion;
mod fit;
mod model;
mod params;
mod simbank;
mod solve;
mod variance;

pub use bootstrap::{parametric_bootstrap, BootstrapResult};
pub use criterion::ScoreMatch;
pub use fit::constrained_fit;
pub use model::{Dataset, Model};
pub use params::ParamVector;
pub use simbank::SimBank;
pub use solve::{solve_aml, solve_aml_at, EstimationResult, SolveOptions};
pub use variance::asymptotic_variance;
