//! Gaussian location model: y ~ N(theta, 1) i.i.d. with no constraint
//! (the constrained set is the whole line, so the pseudo-score is the exact
//! score). Used as the exactness oracle for the engine: the estimator must
//! agree with the sample mean and attain the efficiency bound as the path
//! count grows.

use crate::engine::{Dataset, Model, ParamVector};
use crate::error::Result;
use crate::numerics::rng::RngStream;
use nalgebra::DMatrix;

pub struct GaussianLocation;

impl Model for GaussianLocation {
    fn name(&self) -> &'static str {
        "gaussian-location"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::free(vec!["theta".into()], vec![0.0])
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1e6, 1e6)]
    }

    fn loglik_constrained(&self, beta: &[f64], data: &Dataset) -> Result<f64> {
        let y = data.values()?;
        let t = y.len() as f64;
        let ss: f64 = y.iter().map(|v| (v - beta[0]) * (v - beta[0])).sum();
        Ok(-0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * ss / t)
    }

    fn pseudo_score(&self, beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        let y = data.values()?;
        let t = y.len() as f64;
        Ok(vec![y.iter().map(|v| v - beta[0]).sum::<f64>() / t])
    }

    fn score_contributions(&self, beta: &[f64], data: &Dataset) -> Result<DMatrix<f64>> {
        let y = data.values()?;
        Ok(DMatrix::from_fn(y.len(), 1, |i, _| y[i] - beta[0]))
    }

    fn simulate(&self, theta: &[f64], len: usize, stream: &mut RngStream) -> Result<Dataset> {
        Ok(Dataset::series(
            (0..len).map(|_| theta[0] + stream.standard_normal()).collect(),
        ))
    }

    fn fit_start(&self, data: &Dataset) -> Vec<f64> {
        vec![crate::stats::mean(data.raw())]
    }
}
