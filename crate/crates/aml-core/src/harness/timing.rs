//! Timing study: cost of one exact-likelihood evaluation (exponential in the
//! number of volatility components) versus one score-matching criterion
//! evaluation (flat in it).

use crate::engine::{Dataset, Model, ScoreMatch, SimBank};
use crate::error::{AmlError, Result};
use crate::models::msm::{msm_loglik, msm_simulate, MsmModel, MsmParams, DENSE_K_LIMIT};
use crate::numerics::rng::RngStream;
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct TimingRow {
    pub k_bar: usize,
    /// Mean seconds per dense log-likelihood evaluation (absent beyond the
    /// dense guard).
    pub loglik_secs: Option<f64>,
    /// Mean seconds per criterion evaluation.
    pub criterion_secs: f64,
}

/// Measure mean evaluation times over `repeats >= 1` runs per grid point.
/// Data are simulated from the volatility model at each grid value; the
/// criterion is evaluated at that same structural point with `paths`
/// simulation paths.
pub fn run_timing(
    k_grid: &[usize],
    t: usize,
    paths: usize,
    repeats: usize,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    if k_grid.is_empty() {
        return Err(AmlError::Config("timing grid is empty".into()));
    }
    if repeats == 0 {
        return Err(AmlError::Config("need at least one timing repeat".into()));
    }

    let mut rows = Vec::new();
    for &k in k_grid {
        let truth = MsmParams::new(1.5, 0.2, 4.0, 0.01, k)?;
        let mut stream = RngStream::new(seed, k as u64);
        let returns = msm_simulate(&truth, t, &mut stream);

        let loglik_secs = if k <= DENSE_K_LIMIT {
            let mut acc = 0.0;
            for _ in 0..repeats {
                let start = Instant::now();
                let ll = msm_loglik(&truth, &returns)?;
                acc += start.elapsed().as_secs_f64();
                assert!(ll.is_finite());
            }
            Some(acc / repeats as f64)
        } else {
            None
        };

        // Criterion evaluation at the structural point, from a constrained
        // anchor; setup cost is excluded from the timing.
        let model = MsmModel::default();
        let data = Dataset::series(returns.clone());
        let template = model.param_template();
        let beta = template
            .with_values(model.fit_start(&data))?
            .projected();
        let bank = SimBank::new(seed, 0, paths, t);
        let matcher = ScoreMatch::new(&model, &data, &beta, &bank)?;
        let theta = vec![truth.m0, truth.gamma_bar, truth.b, truth.sigma, k as f64];
        let mut acc = 0.0;
        for _ in 0..repeats {
            let start = Instant::now();
            let c = matcher.criterion(&theta)?;
            acc += start.elapsed().as_secs_f64();
            assert!(c.is_finite());
        }
        rows.push(TimingRow {
            k_bar: k,
            loglik_secs,
            criterion_secs: acc / repeats as f64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_is_rejected() {
        assert!(run_timing(&[], 500, 5, 1, 1).is_err());
    }
}
