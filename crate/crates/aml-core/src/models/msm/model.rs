//! Engine wiring for the multifractal model.

use super::score::{msm_pseudo_score, msm_score_contributions, CONSTRAINED_K_BAR};
use super::{msm_simulate, MsmParams};
use crate::engine::{solve_aml, Dataset, EstimationResult, Model, ParamVector, SimBank, SolveOptions};
use crate::error::{AmlError, Result};
use crate::numerics::hac::bartlett_default_lags;
use crate::numerics::rng::RngStream;
use crate::stats;
use nalgebra::DMatrix;

/// Model instance. The return mean is a fixed (non-estimated) field; every
/// experiment runs on demeaned returns.
pub struct MsmModel {
    pub mu: f64,
    /// Search ceiling for the number of components.
    pub k_max: usize,
}

impl Default for MsmModel {
    fn default() -> Self {
        Self { mu: 0.0, k_max: 25 }
    }
}

impl MsmModel {
    fn params_from(&self, theta: &[f64]) -> Result<MsmParams> {
        let k = theta[4].round();
        if k < 1.0 {
            return Err(AmlError::InvalidParam(format!(
                "component count must be a positive integer, got {}",
                theta[4]
            )));
        }
        Ok(MsmParams {
            m0: theta[0],
            gamma_bar: theta[1],
            b: theta[2],
            sigma: theta[3],
            k_bar: k as usize,
            mu: self.mu,
        })
    }

    fn zeta(theta: &[f64]) -> [f64; 4] {
        [theta[0], theta[1], theta[2], theta[3]]
    }
}

impl Model for MsmModel {
    fn name(&self) -> &'static str {
        "msm"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::new(
            vec![
                "m0".into(),
                "gamma_bar".into(),
                "b".into(),
                "sigma".into(),
                "k_bar".into(),
            ],
            vec![1.5, 0.5, 3.0, 0.01, CONSTRAINED_K_BAR as f64],
            vec![false, false, false, false, true],
            vec![0.0, 0.0, 0.0, 0.0, CONSTRAINED_K_BAR as f64],
            vec![false, false, false, false, true],
        )
        .expect("aligned")
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![
            (1.0 + 1e-6, 2.0 - 1e-6),
            (1e-4, 1.0),
            (1.0 + 1e-4, 60.0),
            (1e-6, 10.0),
            (1.0, self.k_max as f64),
        ]
    }

    fn loglik_constrained(&self, beta: &[f64], data: &Dataset) -> Result<f64> {
        let params = self.params_from(beta)?;
        super::msm_loglik(&params, data.values()?)
    }

    fn pseudo_score(&self, beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        msm_pseudo_score(&Self::zeta(beta), data.values()?)
    }

    fn score_contributions(&self, beta: &[f64], data: &Dataset) -> Result<DMatrix<f64>> {
        msm_score_contributions(&Self::zeta(beta), data.values()?)
    }

    fn simulate(&self, theta: &[f64], len: usize, stream: &mut RngStream) -> Result<Dataset> {
        let params = self.params_from(theta).map_err(|e| AmlError::Simulation {
            theta: theta.to_vec(),
            reason: e.to_string(),
        })?;
        params.validate().map_err(|e| AmlError::Simulation {
            theta: theta.to_vec(),
            reason: e.to_string(),
        })?;
        Ok(Dataset::series(msm_simulate(&params, len, stream)))
    }

    fn fit_start(&self, data: &Dataset) -> Vec<f64> {
        let sd = stats::sd(data.raw()).max(1e-6);
        vec![1.5, 0.5, 3.0, sd, CONSTRAINED_K_BAR as f64]
    }

    fn lrv_lags(&self, t: usize) -> usize {
        bartlett_default_lags(t)
    }

    /// Simulated paths move on a discrete renewal grid, so derivative steps
    /// must dominate the path-switching jump noise.
    fn criterion_fd_step(&self) -> f64 {
        1e-2
    }

    /// When the component count changes, keep the *frequency span*
    /// `b^(k - 1)` of the renewal probabilities constant: a fit with few
    /// components spreads them widely, and the spacing must shrink as
    /// components are added. Without this the continuous block starts each
    /// integer step in a different basin.
    fn integer_step_hint(&self, theta: &[f64], dim: usize, new_value: f64) -> Vec<f64> {
        let mut th = theta.to_vec();
        let old_k = theta[dim].round();
        th[dim] = new_value;
        if dim == 4 && old_k > 1.0 && new_value > 1.0 {
            let span = theta[2].max(1.0 + 1e-4).powf(old_k - 1.0);
            th[2] = span.powf(1.0 / (new_value - 1.0)).clamp(1.0 + 1e-4, 60.0);
        }
        th
    }
}

/// Full estimation pipeline on a return series: constrained fit at
/// `k_bar = 2`, score matching over `(m0, gamma_bar, b, sigma, k_bar)` with
/// the integer direction handled by the piecewise-linear extension, and the
/// sandwich covariance.
pub fn msm_aml_fit(returns: &[f64], paths: usize, seed: u64) -> Result<EstimationResult> {
    if returns.len() < 100 {
        return Err(AmlError::Config(
            "need at least 100 observations for estimation".into(),
        ));
    }
    let model = MsmModel::default();
    let data = Dataset::series(returns.to_vec());
    let bank = SimBank::new(seed, 0, paths, returns.len());
    let opts = SolveOptions {
        with_covariance: true,
        ..SolveOptions::default()
    };
    solve_aml(&model, &data, &bank, &opts)
}
