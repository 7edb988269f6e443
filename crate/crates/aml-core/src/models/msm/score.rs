//! Pseudo-score of the multifractal model under the `k_bar = 2` constraint.
//!
//! The four continuous components are central finite differences of the
//! constrained log-likelihood in `(m0, gamma_bar, b, sigma)`; the component
//! for the (integer) number of volatility components is the likelihood
//! difference between `k_bar = 3` and `k_bar = 2`. The score is always
//! 5-dimensional.

use super::filter::{log_increments, TransitionMode};
use super::MsmParams;
use crate::error::Result;
use nalgebra::DMatrix;

/// The constrained number of components: the smallest value that identifies
/// every continuous parameter (`b` drops out at one component).
pub const CONSTRAINED_K_BAR: usize = 2;

/// Upper likelihood endpoint of the integer-direction difference.
pub const SCORE_K_HIGH: usize = 3;

/// Relative finite-difference step in the continuous directions.
const ZETA_STEP: f64 = 1e-4;

/// Open-domain limits used to clip finite-difference steps (one-sided
/// fallback at an edge).
const ZETA_BOUNDS: [(f64, f64); 4] = [
    (1.0 + 1e-9, 2.0 - 1e-9),
    (1e-9, 1.0),
    (1.0 + 1e-9, f64::INFINITY),
    (1e-12, f64::INFINITY),
];

fn params_at(zeta: &[f64; 4], k_bar: usize) -> Result<MsmParams> {
    MsmParams::new(zeta[0], zeta[1], zeta[2], zeta[3], k_bar)
}

fn increments_at(zeta: &[f64; 4], k_bar: usize, returns: &[f64]) -> Result<Vec<f64>> {
    log_increments(&params_at(zeta, k_bar)?, returns, TransitionMode::Dense)
}

/// Per-date pseudo-score contributions (T x 5). Column means equal
/// [`msm_pseudo_score`].
pub fn msm_score_contributions(zeta: &[f64; 4], returns: &[f64]) -> Result<DMatrix<f64>> {
    let t = returns.len();
    let mut out = DMatrix::zeros(t, 5);

    for j in 0..4 {
        let h = ZETA_STEP * zeta[j].abs().max(1.0);
        let (lo, hi) = ZETA_BOUNDS[j];
        let up_ok = zeta[j] + h <= hi;
        let dn_ok = zeta[j] - h >= lo;
        let mut zp = *zeta;
        let mut zm = *zeta;
        let dh = match (up_ok, dn_ok) {
            (true, true) => {
                zp[j] += h;
                zm[j] -= h;
                2.0 * h
            }
            (true, false) => {
                zp[j] += h;
                h
            }
            _ => {
                zm[j] -= h;
                h
            }
        };
        let up = increments_at(&zp, CONSTRAINED_K_BAR, returns)?;
        let dn = increments_at(&zm, CONSTRAINED_K_BAR, returns)?;
        for i in 0..t {
            out[(i, j)] = (up[i] - dn[i]) / dh;
        }
    }

    let hi = increments_at(zeta, SCORE_K_HIGH, returns)?;
    let lo = increments_at(zeta, CONSTRAINED_K_BAR, returns)?;
    for i in 0..t {
        out[(i, 4)] = hi[i] - lo[i];
    }
    Ok(out)
}

/// The 5-component pseudo-score at the constrained point.
pub fn msm_pseudo_score(zeta: &[f64; 4], returns: &[f64]) -> Result<Vec<f64>> {
    let mean_of = |incr: &[f64]| incr.iter().sum::<f64>() / incr.len() as f64;
    let mut score = vec![0.0; 5];

    for (j, s) in score.iter_mut().take(4).enumerate() {
        let h = ZETA_STEP * zeta[j].abs().max(1.0);
        let (lo, hi) = ZETA_BOUNDS[j];
        let up_ok = zeta[j] + h <= hi;
        let dn_ok = zeta[j] - h >= lo;
        let mut zp = *zeta;
        let mut zm = *zeta;
        let dh = match (up_ok, dn_ok) {
            (true, true) => {
                zp[j] += h;
                zm[j] -= h;
                2.0 * h
            }
            (true, false) => {
                zp[j] += h;
                h
            }
            _ => {
                zm[j] -= h;
                h
            }
        };
        let up = mean_of(&increments_at(&zp, CONSTRAINED_K_BAR, returns)?);
        let dn = mean_of(&increments_at(&zm, CONSTRAINED_K_BAR, returns)?);
        *s = (up - dn) / dh;
    }

    score[4] = mean_of(&increments_at(zeta, SCORE_K_HIGH, returns)?)
        - mean_of(&increments_at(zeta, CONSTRAINED_K_BAR, returns)?);
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{constrained_fit, Dataset, Model};
    use crate::models::msm::{msm_loglik, msm_simulate, MsmModel};
    use crate::numerics::optim::OptimConfig;
    use crate::numerics::rng::RngStream;
    use crate::stats;

    #[test]
    fn integer_direction_recomputes_from_two_likelihood_calls() {
        let p = MsmParams::new(1.5, 0.4, 5.0, 0.01, 4).unwrap();
        let mut stream = RngStream::new(71, 0);
        let r = msm_simulate(&p, 400, &mut stream);
        let zeta = [1.45, 0.35, 4.0, 0.011];
        let score = msm_pseudo_score(&zeta, &r).unwrap();
        let l3 = msm_loglik(&params_at(&zeta, 3).unwrap(), &r).unwrap();
        let l2 = msm_loglik(&params_at(&zeta, 2).unwrap(), &r).unwrap();
        assert!((score[4] - (l3 - l2)).abs() < 1e-12);
    }

    #[test]
    fn score_dimension_is_five_for_any_generating_k() {
        for k in [1usize, 4, 8] {
            let p = MsmParams::new(1.5, 0.4, 5.0, 0.01, k).unwrap();
            let mut stream = RngStream::new(72, 0);
            let r = msm_simulate(&p, 200, &mut stream);
            let score = msm_pseudo_score(&[1.5, 0.4, 5.0, 0.01], &r).unwrap();
            assert_eq!(score.len(), 5);
        }
    }

    #[test]
    fn contributions_average_to_the_score() {
        let p = MsmParams::new(1.5, 0.4, 5.0, 0.01, 2).unwrap();
        let mut stream = RngStream::new(73, 0);
        let r = msm_simulate(&p, 300, &mut stream);
        let zeta = [1.48, 0.38, 4.5, 0.0105];
        let score = msm_pseudo_score(&zeta, &r).unwrap();
        let contrib = msm_score_contributions(&zeta, &r).unwrap();
        for j in 0..5 {
            let mean = contrib.column(j).sum() / r.len() as f64;
            // Summation order differs between the two paths; only float
            // round-off separates them.
            assert!(
                (mean - score[j]).abs() < 1e-9,
                "component {j}: {mean} vs {}",
                score[j]
            );
        }
    }

    #[test]
    fn continuous_block_vanishes_at_the_constrained_mle() {
        let truth = MsmParams::new(1.5, 0.4, 5.0, 0.01, 2).unwrap();
        let mut stream = RngStream::new(74, 0);
        let r = msm_simulate(&truth, 3000, &mut stream);
        let model = MsmModel::default();
        let data = Dataset::series(r.clone());
        let beta = constrained_fit(&model, &data, &OptimConfig::for_likelihood()).unwrap();
        let zeta = [
            beta.values()[0],
            beta.values()[1],
            beta.values()[2],
            beta.values()[3],
        ];
        let score = msm_pseudo_score(&zeta, &r).unwrap();
        for (j, s) in score.iter().take(4).enumerate() {
            // The score slope differs wildly across components; compare
            // against the dispersion of the per-date contributions.
            let contrib = msm_score_contributions(&zeta, &r).unwrap();
            let sd_j = {
                let col: Vec<f64> = contrib.column(j).iter().copied().collect();
                stats::sd(&col)
            };
            let tol = 4.0 * sd_j / (r.len() as f64).sqrt() + 1e-4 * sd_j.max(1.0);
            assert!(s.abs() < tol, "component {j} = {s} (tol {tol})");
        }
    }

    #[test]
    fn more_components_shift_the_integer_direction_upward() {
        // Monte Carlo sign oracle for the integer direction: the
        // likelihood-difference component at the constrained fit is an
        // increasing function of the generating component count. (Its raw
        // level at the fit is negative for any truth — the constrained fit
        // tailors the continuous parameters to the two-component model — so
        // the signal is the shift relative to the two-component baseline.)
        let reps = 20u64;
        let mean_component_for = |k_true: usize| -> Vec<f64> {
            let mut comps = Vec::new();
            for rep in 0..reps {
                let truth = MsmParams::new(1.5, 0.4, 5.0, 0.01, k_true).unwrap();
                let mut stream = RngStream::new(75 + rep, 0);
                let r = msm_simulate(&truth, 2000, &mut stream);
                let model = MsmModel::default();
                let data = Dataset::series(r.clone());
                let beta =
                    constrained_fit(&model, &data, &OptimConfig::for_likelihood()).unwrap();
                let zeta = [
                    beta.values()[0],
                    beta.values()[1],
                    beta.values()[2],
                    beta.values()[3],
                ];
                comps.push(msm_pseudo_score(&zeta, &r).unwrap()[4]);
            }
            comps
        };
        let base = mean_component_for(2);
        let four = mean_component_for(4);
        let gap = stats::mean(&four) - stats::mean(&base);
        let se = (stats::variance(&base) / reps as f64 + stats::variance(&four) / reps as f64)
            .sqrt();
        assert!(gap > 3.0 * se, "gap {gap} (se {se})");
    }
}
