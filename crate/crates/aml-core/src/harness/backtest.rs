//! Risk-forecast backtests: value-at-risk failure rates and the
//! expected-shortfall accuracy regression, driven by the particle filter.

use crate::error::Result;
use crate::models::msm::{es_backtest, failure_rate, particle_filter_forecasts, MsmParams};
use crate::numerics::rng::RngStream;
use crate::stats::{binomial_se, OlsLine};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct BacktestReport {
    pub seed: u64,
    pub version: String,
    pub observations: usize,
    pub n_particles: usize,
    pub alphas: Vec<f64>,
    /// Empirical exceedance frequency per tail level.
    pub failure_rates: Vec<f64>,
    /// Binomial standard errors at the observed rates.
    pub failure_rate_se: Vec<f64>,
    /// Expected-shortfall regression per tail level (absent when fewer than
    /// 10 tail observations are available).
    pub es_regressions: Vec<Option<OlsLine>>,
    pub min_ess: f64,
}

/// Forecast one step ahead at each date with a particle filter of size
/// `n_particles`, then summarize threshold breaches and expected-shortfall
/// accuracy.
pub fn run_backtest(
    params: &MsmParams,
    returns: &[f64],
    n_particles: usize,
    alphas: &[f64],
    seed: u64,
) -> Result<BacktestReport> {
    let mut stream = RngStream::new(seed, 0);
    let fc = particle_filter_forecasts(params, returns, n_particles, alphas, &mut stream)?;

    let mut failure_rates = Vec::new();
    let mut failure_rate_se = Vec::new();
    let mut es_regressions = Vec::new();
    for (a, _alpha) in alphas.iter().enumerate() {
        let p = failure_rate(returns, &fc.var[a]);
        failure_rates.push(p);
        failure_rate_se.push(binomial_se(p, returns.len()));

        // Realized tail returns (beyond this level's own threshold)
        // regressed on the matching expected-shortfall forecasts.
        let mut tail_r = Vec::new();
        let mut tail_es = Vec::new();
        for t in 0..returns.len() {
            if returns[t] < -fc.var[a][t] {
                tail_r.push(returns[t]);
                tail_es.push(fc.es[a][t]);
            }
        }
        es_regressions.push(if tail_r.len() >= 10 {
            Some(es_backtest(&tail_r, &tail_es)?)
        } else {
            None
        });
    }

    Ok(BacktestReport {
        seed,
        version: crate::TOOLKIT_VERSION.into(),
        observations: returns.len(),
        n_particles,
        alphas: alphas.to_vec(),
        failure_rates,
        failure_rate_se,
        es_regressions,
        min_ess: fc.min_ess,
    })
}
