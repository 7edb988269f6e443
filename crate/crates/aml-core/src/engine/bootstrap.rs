//! Parametric bootstrap: re-estimate on synthetic datasets simulated at the
//! point estimate and report the dispersion of the re-estimates.

use crate::engine::model::{Dataset, Model};
use crate::engine::params::ParamVector;
use crate::engine::simbank::SimBank;
use crate::engine::solve::{solve_aml, SolveOptions};
use crate::error::{AmlError, Result};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct BootstrapResult {
    /// Per-component standard deviation of the re-estimates.
    pub std_errors: Vec<f64>,
    /// Replications dropped for non-convergence.
    pub dropped: usize,
    /// Successful re-estimates, in replication order.
    pub draws: Vec<Vec<f64>>,
}

/// Simulate `b` datasets of length `len` at `theta_hat`, re-estimate each,
/// and return the standard deviation of the estimates. Replications that
/// fail are dropped and counted; more than 20% dropped is an error.
///
/// `bank_template` fixes the master seed layout; replication `r` of the
/// bootstrap uses its own data stream and simulation bank, so the whole
/// procedure is deterministic given the template's seed.
pub fn parametric_bootstrap<M: Model + ?Sized>(
    model: &M,
    theta_hat: &ParamVector,
    len: usize,
    b: usize,
    bank_template: &SimBank,
    opts: &SolveOptions,
) -> Result<BootstrapResult> {
    if b < 2 {
        return Err(AmlError::Config(
            "bootstrap needs at least 2 replications".into(),
        ));
    }
    let theta = theta_hat.values().to_vec();
    let opts = SolveOptions {
        with_covariance: false,
        ..opts.clone()
    };

    let outcomes: Vec<Option<Vec<f64>>> = (0..b as u64)
        .into_par_iter()
        .map(|rep| {
            let bank = bank_template.for_replication(rep);
            let mut data_stream = bank.data_stream();
            let data: Dataset = match model.simulate(&theta, len, &mut data_stream) {
                Ok(d) => d,
                Err(_) => return None,
            };
            match solve_aml(model, &data, &bank, &opts) {
                Ok(r) if r.converged => Some(r.theta_hat.values().to_vec()),
                _ => None,
            }
        })
        .collect();

    let draws: Vec<Vec<f64>> = outcomes.iter().flatten().cloned().collect();
    let dropped = b - draws.len();
    if dropped * 5 > b {
        return Err(AmlError::TooManyDropped { dropped, total: b });
    }

    let p = theta.len();
    let n = draws.len() as f64;
    let mut std_errors = vec![0.0; p];
    for j in 0..p {
        let mean = draws.iter().map(|d| d[j]).sum::<f64>() / n;
        let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        std_errors[j] = var.sqrt();
    }

    Ok(BootstrapResult {
        std_errors,
        dropped,
        draws,
    })
}
