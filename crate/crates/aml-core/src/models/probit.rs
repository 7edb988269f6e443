//! Probit with autoregressive latent errors.
//!
//! `y_t = 1[x_t' theta1 + u_t > 0]` with `u_t = theta2 u_{t-1} + nu_t`.
//! Pinning `theta2 = 0` reduces the likelihood to the standard probit. The
//! pseudo-score couples the probit score with the lag-1 cross-product of
//! generalized residuals, which carries the serial-dependence signal.

use crate::engine::{Dataset, Model, ParamVector};
use crate::error::{AmlError, Result};
use crate::numerics::rng::RngStream;
use crate::stats::{inverse_mills, normal_log_cdf, normal_pdf};
use nalgebra::DMatrix;

pub struct ProbitModel {
    /// Regressor design, T x q.
    pub x: DMatrix<f64>,
}

/// Generalized residual of the probit under the independence restriction:
/// `phi(v)[y - Phi(v)] / {Phi(v)[1 - Phi(v)]}` with `v = x't1`, evaluated in
/// log space when the index is far in a tail.
pub fn generalized_residual(index: f64, y: f64) -> f64 {
    if index.abs() <= 8.0 {
        let phi = normal_pdf(index);
        let cap = crate::stats::normal_cdf(index);
        phi * (y - cap) / (cap * (1.0 - cap))
    } else if y > 0.5 {
        // phi/Phi, tiny unless the index is very negative.
        inverse_mills(index)
    } else {
        // -phi/(1 - Phi) = -phi(-v)/Phi(-v) by symmetry.
        -inverse_mills(-index)
    }
}

impl ProbitModel {
    pub fn new(x: DMatrix<f64>) -> Self {
        Self { x }
    }

    /// Single standard-normal regressor design.
    pub fn gaussian_design(t: usize, stream: &mut RngStream) -> Self {
        Self {
            x: DMatrix::from_fn(t, 1, |_, _| stream.standard_normal()),
        }
    }

    pub fn q(&self) -> usize {
        self.x.ncols()
    }

    fn index(&self, i: usize, theta1: &[f64]) -> f64 {
        (0..self.q()).map(|j| self.x[(i, j)] * theta1[j]).sum()
    }
}

impl Model for ProbitModel {
    fn name(&self) -> &'static str {
        "probit"
    }

    fn param_template(&self) -> ParamVector {
        let q = self.q();
        let mut names: Vec<String> = (0..q).map(|j| format!("theta1{}", j + 1)).collect();
        names.push("theta2".into());
        let mut fixed = vec![false; q + 1];
        fixed[q] = true;
        ParamVector::new(
            names,
            vec![0.0; q + 1],
            fixed,
            vec![0.0; q + 1],
            vec![false; q + 1],
        )
        .expect("aligned")
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let q = self.q();
        let mut b = vec![(-50.0, 50.0); q + 1];
        b[q] = (-0.99, 0.99);
        b
    }

    fn loglik_constrained(&self, beta: &[f64], data: &Dataset) -> Result<f64> {
        let y = data.values()?;
        let t = y.len() as f64;
        let mut ll = 0.0;
        for i in 0..y.len() {
            let v = self.index(i, &beta[..self.q()]);
            ll += if y[i] > 0.5 {
                normal_log_cdf(v)
            } else {
                normal_log_cdf(-v)
            };
        }
        Ok(ll / t)
    }

    fn pseudo_score(&self, beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        let c = self.score_contributions(beta, data)?;
        let t = c.nrows() as f64;
        Ok((0..c.ncols()).map(|j| c.column(j).sum() / t).collect())
    }

    fn score_contributions(&self, beta: &[f64], data: &Dataset) -> Result<DMatrix<f64>> {
        let y = data.values()?;
        if y.len() < 2 {
            return Err(AmlError::Config("need at least two observations".into()));
        }
        let q = self.q();
        let mut out = DMatrix::zeros(y.len(), q + 1);
        let mut prev_resid = 0.0;
        for i in 0..y.len() {
            let v = self.index(i, &beta[..q]);
            let resid = generalized_residual(v, y[i]);
            for j in 0..q {
                out[(i, j)] = self.x[(i, j)] * resid;
            }
            if i > 0 {
                out[(i, q)] = prev_resid * resid;
            }
            prev_resid = resid;
        }
        Ok(out)
    }

    fn simulate(&self, theta: &[f64], len: usize, stream: &mut RngStream) -> Result<Dataset> {
        if len != self.x.nrows() {
            return Err(AmlError::Simulation {
                theta: theta.to_vec(),
                reason: format!(
                    "simulation length {len} must match the design rows {}",
                    self.x.nrows()
                ),
            });
        }
        let q = self.q();
        let rho = theta[q];
        if rho.abs() >= 1.0 {
            return Err(AmlError::Simulation {
                theta: theta.to_vec(),
                reason: "autoregressive coefficient must lie in (-1, 1)".into(),
            });
        }
        // Stationary start for the latent error.
        let mut u = stream.standard_normal() / (1.0 - rho * rho).sqrt();
        let mut y = Vec::with_capacity(len);
        for i in 0..len {
            u = rho * u + stream.standard_normal();
            let latent = self.index(i, &theta[..q]) + u;
            y.push(if latent > 0.0 { 1.0 } else { 0.0 });
        }
        Ok(Dataset::series(y))
    }

    /// Simulated-path score with the final innovation of each period
    /// integrated out: the current-period generalized residual is replaced
    /// by its expectation given the previous latent error,
    /// `E[resid_t | u_{t-1}] = phi(v)[Phi(x't1 + t2 u_{t-1}) - Phi(v)] /
    /// {Phi(v)(1 - Phi(v))}`. The lagged factor of the serial-dependence
    /// component keeps the realized outcome. Unbiased by iterated
    /// expectations, and the dominant jump source in `theta` is gone.
    fn simulated_pseudo_score(
        &self,
        beta: &[f64],
        theta: &[f64],
        len: usize,
        stream: &mut RngStream,
    ) -> Result<Vec<f64>> {
        if len != self.x.nrows() {
            return Err(AmlError::Simulation {
                theta: theta.to_vec(),
                reason: "simulation length must match the design rows".into(),
            });
        }
        let q = self.q();
        let rho = theta[q];
        if rho.abs() >= 1.0 {
            return Err(AmlError::Simulation {
                theta: theta.to_vec(),
                reason: "autoregressive coefficient must lie in (-1, 1)".into(),
            });
        }
        let mut acc = vec![0.0; q + 1];
        let mut u_prev = stream.standard_normal() / (1.0 - rho * rho).sqrt();
        let mut resid_prev = 0.0; // realized residual of the previous period
        for i in 0..len {
            let v = self.index(i, &beta[..q]);
            // Probability that this period's outcome is one, given u_{t-1}.
            let prob_one = crate::stats::normal_cdf(self.index(i, &theta[..q]) + rho * u_prev);
            let expected_resid = prob_one * generalized_residual(v, 1.0)
                + (1.0 - prob_one) * generalized_residual(v, 0.0);
            for j in 0..q {
                acc[j] += self.x[(i, j)] * expected_resid;
            }
            if i > 0 {
                acc[q] += resid_prev * expected_resid;
            }
            // Realize the period to carry the lagged factor forward.
            let u = rho * u_prev + stream.standard_normal();
            let y = if self.index(i, &theta[..q]) + u > 0.0 {
                1.0
            } else {
                0.0
            };
            resid_prev = generalized_residual(v, y);
            u_prev = u;
        }
        for a in acc.iter_mut() {
            *a /= len as f64;
        }
        Ok(acc)
    }

    fn fit_start(&self, _data: &Dataset) -> Vec<f64> {
        vec![0.0; self.q() + 1]
    }

    fn lrv_lags(&self, t: usize) -> usize {
        crate::numerics::hac::bartlett_default_lags(t)
    }
}
