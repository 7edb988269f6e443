//! Bootstrap particle filter over the multiplier states, producing one-step
//! -ahead predictive return draws for value-at-risk and expected-shortfall
//! forecasting.

use super::MsmParams;
use crate::error::{AmlError, Result};
use crate::numerics::rng::RngStream;
use std::f64::consts::PI;

/// Per-date risk forecasts at the requested tail levels.
#[derive(Clone, Debug)]
pub struct ForecastSeries {
    pub alphas: Vec<f64>,
    /// `var[a][t]`: loss threshold (positive for losses) at level `alphas[a]`.
    pub var: Vec<Vec<f64>>,
    /// `es[a][t]`: mean predictive return beyond the threshold (negative).
    pub es: Vec<Vec<f64>>,
    /// Smallest effective sample size observed across dates.
    pub min_ess: f64,
}

/// Run the particle filter and hand each date's predictive draws to `sink`
/// before the date's return is observed. Particles propagate by the renewal
/// law, are weighted by the Gaussian return density at their state's
/// volatility, and are resampled systematically every step.
pub fn particle_filter_with_draws<F>(
    params: &MsmParams,
    returns: &[f64],
    n_particles: usize,
    stream: &mut RngStream,
    mut sink: F,
) -> Result<f64>
where
    F: FnMut(usize, &[f64]),
{
    params.validate()?;
    if n_particles < 1000 {
        return Err(AmlError::Config(
            "particle filter needs at least 1000 particles".into(),
        ));
    }
    let k_bar = params.k_bar;
    let gammas = params.gammas();
    let sds = params.sd_by_high_count();
    let norm = 1.0 / (2.0 * PI).sqrt();

    // Particle state: count of high components is all the density needs, but
    // propagation is per component, so keep the bitsets.
    let mut states: Vec<u32> = Vec::with_capacity(n_particles);
    for _ in 0..n_particles {
        let mut s = 0u32;
        for k in 0..k_bar {
            if stream.uniform() < 0.5 {
                s |= 1 << k;
            }
        }
        states.push(s);
    }

    let mut draws = vec![0.0; n_particles];
    let mut weights = vec![0.0; n_particles];
    let mut resampled = vec![0u32; n_particles];
    let mut min_ess = f64::INFINITY;

    for (t, &r) in returns.iter().enumerate() {
        // Predictive draws (before observing r_t).
        for (d, &s) in draws.iter_mut().zip(states.iter()) {
            let sd = sds[s.count_ones() as usize];
            *d = params.mu + sd * stream.standard_normal();
        }
        sink(t, &draws);

        // Weight by the observed return's density under each particle.
        let e = r - params.mu;
        let mut total = 0.0;
        for (w, &s) in weights.iter_mut().zip(states.iter()) {
            let sd = sds[s.count_ones() as usize];
            let z = e / sd;
            *w = norm * (-0.5 * z * z).exp() / sd;
            total += *w;
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(AmlError::WeightCollapse { date: t });
        }
        let ess = total * total / weights.iter().map(|w| w * w).sum::<f64>();
        min_ess = min_ess.min(ess);

        // Systematic resampling.
        let step = total / n_particles as f64;
        let mut position = stream.uniform() * step;
        let mut cumulative = weights[0];
        let mut idx = 0usize;
        for slot in resampled.iter_mut() {
            while cumulative < position && idx + 1 < n_particles {
                idx += 1;
                cumulative += weights[idx];
            }
            *slot = states[idx];
            position += step;
        }
        states.copy_from_slice(&resampled);

        // Propagate by the renewal law.
        for s in states.iter_mut() {
            for (k, &g) in gammas.iter().enumerate() {
                if stream.uniform() < g {
                    if stream.uniform() < 0.5 {
                        *s |= 1 << k;
                    } else {
                        *s &= !(1 << k);
                    }
                }
            }
        }
    }
    Ok(min_ess)
}

/// Value-at-risk and expected-shortfall forecasts at each date: the VaR is
/// the negated lower sample quantile of the predictive draws, the ES the
/// mean of the draws beyond it.
pub fn particle_filter_forecasts(
    params: &MsmParams,
    returns: &[f64],
    n_particles: usize,
    alphas: &[f64],
    stream: &mut RngStream,
) -> Result<ForecastSeries> {
    for &a in alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(AmlError::Config(format!(
                "tail level must lie strictly inside (0, 1), got {a}"
            )));
        }
    }
    let t = returns.len();
    let mut var = vec![vec![0.0; t]; alphas.len()];
    let mut es = vec![vec![0.0; t]; alphas.len()];

    let mut scratch = vec![0.0; n_particles];
    let min_ess = particle_filter_with_draws(params, returns, n_particles, stream, |date, draws| {
        for (a, &alpha) in alphas.iter().enumerate() {
            scratch.copy_from_slice(draws);
            let k = ((alpha * n_particles as f64).ceil() as usize).clamp(1, n_particles) - 1;
            let (below, q, _) =
                scratch.select_nth_unstable_by(k, |x, y| x.partial_cmp(y).unwrap());
            let quantile = *q;
            var[a][date] = -quantile;
            es[a][date] = if below.is_empty() {
                quantile
            } else {
                below.iter().sum::<f64>() / below.len() as f64
            };
        }
    })?;

    Ok(ForecastSeries {
        alphas: alphas.to_vec(),
        var,
        es,
        min_ess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::msm::msm_simulate;
    use crate::stats;

    #[test]
    fn degenerate_model_gives_the_gaussian_quantile() {
        // m0 -> 1: constant volatility, VaR_alpha = -sigma z_alpha.
        let p = MsmParams {
            m0: 1.0 + 1e-12,
            gamma_bar: 0.4,
            b: 3.0,
            sigma: 0.02,
            k_bar: 3,
            mu: 0.0,
        };
        let mut stream = RngStream::new(81, 0);
        let r = msm_simulate(&p, 50, &mut stream);
        let n = 20_000;
        let fc = particle_filter_forecasts(&p, &r, n, &[0.05], &mut stream).unwrap();
        // z_{0.05} = -1.6449; quantile MC error ~ sqrt(a(1-a)/n)/phi(z).
        let expect = 1.6449 * p.sigma;
        let se = (0.05f64 * 0.95 / n as f64).sqrt() / stats::normal_pdf(-1.6449) * p.sigma;
        for t in 0..r.len() {
            assert!(
                (fc.var[0][t] - expect).abs() < 5.0 * se,
                "date {t}: VaR {} vs {expect}",
                fc.var[0][t]
            );
        }
    }

    #[test]
    fn expected_shortfall_lies_beyond_the_var() {
        let p = MsmParams::new(1.5, 0.4, 5.0, 0.01, 4).unwrap();
        let mut stream = RngStream::new(82, 0);
        let r = msm_simulate(&p, 100, &mut stream);
        let fc = particle_filter_forecasts(&p, &r, 5000, &[0.05, 0.01], &mut stream).unwrap();
        for a in 0..2 {
            for t in 0..r.len() {
                assert!(
                    fc.es[a][t] < -fc.var[a][t] + 1e-12,
                    "date {t}, level {a}: ES {} vs -VaR {}",
                    fc.es[a][t],
                    -fc.var[a][t]
                );
            }
        }
    }

    #[test]
    fn invalid_tail_level_is_rejected() {
        let p = MsmParams::new(1.5, 0.4, 5.0, 0.01, 2).unwrap();
        let mut stream = RngStream::new(83, 0);
        let r = msm_simulate(&p, 20, &mut stream);
        assert!(particle_filter_forecasts(&p, &r, 2000, &[1.0], &mut stream).is_err());
    }

    #[test]
    fn too_few_particles_rejected() {
        let p = MsmParams::new(1.5, 0.4, 5.0, 0.01, 2).unwrap();
        let mut stream = RngStream::new(84, 0);
        let r = msm_simulate(&p, 20, &mut stream);
        assert!(particle_filter_forecasts(&p, &r, 10, &[0.05], &mut stream).is_err());
    }
}
