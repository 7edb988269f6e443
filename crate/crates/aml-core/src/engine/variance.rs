//! Sandwich covariance of the score-matching estimator:
//! `(1 + 1/H) J^{-1} I J^{-T}` with `J` the (negative) slope of the
//! simulated average pseudo-score in the structural parameters and `I` the
//! long-run variance of the per-observation score contributions.

use crate::engine::criterion::ScoreMatch;
use crate::engine::model::{Dataset, Model};
use crate::engine::params::ParamVector;
use crate::engine::simbank::SimBank;
use crate::error::Result;
use crate::linalg::{invert, psd_floor};
use crate::numerics::hac::long_run_variance;
use crate::numerics::optim::OptimConfig;
use nalgebra::DMatrix;

/// Finite-difference step used for integer components, where the simulated
/// score is the piecewise-linear blend between adjacent integers.
const INTEGER_STEP: f64 = 0.5;

pub fn asymptotic_variance<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    theta_hat: &ParamVector,
    beta_hat: &ParamVector,
    bank: &SimBank,
    cfg: &OptimConfig,
) -> Result<DMatrix<f64>> {
    let matcher = ScoreMatch::new(model, data, beta_hat, bank)?;
    let theta = theta_hat.values();
    let p = theta.len();
    let bounds = model.bounds();
    let integer_dims = theta_hat.integer_indices();

    // J = -d(sim avg score)/d theta' by central differences (one-sided at
    // active bounds).
    let fd_step = model.criterion_fd_step().max(cfg.fd_step);
    let mut jac = DMatrix::zeros(p, p);
    for j in 0..p {
        let h = if integer_dims.contains(&j) {
            INTEGER_STEP
        } else {
            fd_step * theta[j].abs().max(1.0)
        };
        let (lo, hi) = bounds[j];
        let up_ok = theta[j] + h <= hi;
        let dn_ok = theta[j] - h >= lo;
        let mut th = theta.to_vec();
        let (gp, gm, dh) = match (up_ok, dn_ok) {
            (true, true) => {
                th[j] = theta[j] + h;
                let gp = matcher.sim_avg_score(&th)?;
                th[j] = theta[j] - h;
                let gm = matcher.sim_avg_score(&th)?;
                (gp, gm, 2.0 * h)
            }
            (true, false) => {
                th[j] = theta[j] + h;
                let gp = matcher.sim_avg_score(&th)?;
                th[j] = theta[j];
                let gm = matcher.sim_avg_score(&th)?;
                (gp, gm, h)
            }
            _ => {
                th[j] = theta[j];
                let gp = matcher.sim_avg_score(&th)?;
                th[j] = theta[j] - h;
                let gm = matcher.sim_avg_score(&th)?;
                (gp, gm, h)
            }
        };
        for i in 0..p {
            jac[(i, j)] = -(gp[i] - gm[i]) / dh;
        }
    }

    let contrib = model.score_contributions(beta_hat.values(), data)?;
    let lags = model.lrv_lags(contrib.nrows());
    let info = long_run_variance(&contrib, lags)?;

    let j_inv = invert(&jac)?;
    let factor = 1.0 + 1.0 / bank.paths() as f64;
    let omega = &j_inv * info * j_inv.transpose() * factor;
    Ok(psd_floor(&omega))
}
