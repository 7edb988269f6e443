//! Shared numerical kernels: RNG streams, differentiation, optimization,
//! quadrature, and long-run variance estimation.

pub mod diff;
pub mod hac;
pub mod optim;
pub mod quad;
pub mod rng;

pub use diff::central_diff_gradient;
pub use hac::{bartlett_default_lags, long_run_variance};
pub use optim::{bfgs, levenberg_marquardt, nelder_mead, OptimConfig, OptimOutcome, OptimStatus};
pub use quad::{integrate, QuadratureRule};
pub use rng::RngStream;
