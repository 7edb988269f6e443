//! Model plug-ins: each supplies the constrained log-likelihood, the
//! full-dimensional pseudo-score, and a simulator, wired into the engine
//! through the [`crate::engine::Model`] trait.

pub mod garch_sv;
pub mod gaussian;
pub mod msm;
pub mod probit;
pub mod stable;
pub mod tobit;
