//! Binomial multifractal volatility model.
//!
//! Volatility is a product of `k_bar` binary multipliers, each taking values
//! `{m0, 2 - m0}` with equal probability and renewing independently with
//! per-component probability `gamma_k = gamma_bar * b^{k - k_bar}` (small
//! `k` components are the most persistent). Returns are
//! `r_{t+1} = mu + sigma * sqrt(prod_k M_{k,t}) * u_{t+1}` with Gaussian
//! innovations.
//!
//! The exact likelihood is a discrete-state filter over `2^k_bar` states and
//! is exponentially expensive in `k_bar`; the estimation route pins
//! `k_bar = 2` (the smallest value identifying all remaining parameters) and
//! matches pseudo-scores instead.

mod backtest;
mod filter;
mod model;
mod particle;
mod score;
mod simulate;

pub use backtest::{es_backtest, failure_rate};
pub use filter::{log_increments, msm_loglik, msm_loglik_factored, TransitionMode};
pub use model::{msm_aml_fit, MsmModel};
pub use particle::{particle_filter_forecasts, ForecastSeries};
pub use score::{msm_pseudo_score, msm_score_contributions, CONSTRAINED_K_BAR, SCORE_K_HIGH};
pub use simulate::{msm_simulate, msm_simulate_with_states};

use crate::error::{AmlError, Result};
use nalgebra::DMatrix;

/// Hard guard for the dense-filter path: beyond this the transition matrix
/// is computationally out of reach.
pub const DENSE_K_LIMIT: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MsmParams {
    pub m0: f64,
    pub gamma_bar: f64,
    pub b: f64,
    pub sigma: f64,
    pub k_bar: usize,
    /// Return mean; not an estimated component in any experiment.
    #[serde(default)]
    pub mu: f64,
}

impl MsmParams {
    pub fn new(m0: f64, gamma_bar: f64, b: f64, sigma: f64, k_bar: usize) -> Result<Self> {
        let p = Self {
            m0,
            gamma_bar,
            b,
            sigma,
            k_bar,
            mu: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0..2.0).contains(&self.m0) {
            return Err(AmlError::InvalidParam(format!(
                "multiplier level must lie in [1, 2), got {}",
                self.m0
            )));
        }
        if !(self.gamma_bar > 0.0 && self.gamma_bar <= 1.0) {
            return Err(AmlError::InvalidParam(format!(
                "renewal probability must lie in (0, 1], got {}",
                self.gamma_bar
            )));
        }
        if self.b <= 1.0 {
            return Err(AmlError::InvalidParam(format!(
                "frequency growth must exceed 1, got {}",
                self.b
            )));
        }
        if self.sigma <= 0.0 {
            return Err(AmlError::InvalidParam("sigma must be positive".into()));
        }
        if self.k_bar == 0 {
            return Err(AmlError::InvalidParam(
                "at least one volatility component is required".into(),
            ));
        }
        Ok(())
    }

    /// Renewal probabilities `gamma_k = gamma_bar * b^{k - k_bar}`, `k = 1..=k_bar`.
    pub fn gammas(&self) -> Vec<f64> {
        (1..=self.k_bar)
            .map(|k| (self.gamma_bar * self.b.powi(k as i32 - self.k_bar as i32)).min(1.0))
            .collect()
    }

    pub fn state_count(&self) -> usize {
        1usize << self.k_bar
    }

    /// Volatility multiplier `g` for a state with `n_high` components at the
    /// `2 - m0` level: `m0^{k_bar - n} (2 - m0)^n`.
    pub fn g_by_high_count(&self) -> Vec<f64> {
        (0..=self.k_bar)
            .map(|n| {
                self.m0.powi((self.k_bar - n) as i32) * (2.0 - self.m0).powi(n as i32)
            })
            .collect()
    }

    /// Per-state standard deviations `sigma * sqrt(g)` indexed by the count
    /// of high components.
    pub fn sd_by_high_count(&self) -> Vec<f64> {
        self.g_by_high_count()
            .iter()
            .map(|g| self.sigma * g.sqrt())
            .collect()
    }
}

/// Popcount lookup for all states of a `k_bar`-component space.
pub(crate) fn high_counts(k_bar: usize) -> Vec<u8> {
    (0..1usize << k_bar).map(|j| (j as u32).count_ones() as u8).collect()
}

/// Dense renewal transition matrix: entry (i, j) is the product over
/// components of `(1 - gamma_k) 1[bit_k(i) = bit_k(j)] + gamma_k / 2`.
pub fn msm_transition(params: &MsmParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    if params.k_bar > DENSE_K_LIMIT {
        return Err(AmlError::StateSpaceTooLarge {
            k_bar: params.k_bar,
            limit: DENSE_K_LIMIT,
        });
    }
    let d = params.state_count();
    let gammas = params.gammas();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut prod = 1.0;
            for (k, &g) in gammas.iter().enumerate() {
                let same = (i >> k) & 1 == (j >> k) & 1;
                prod *= if same { 1.0 - 0.5 * g } else { 0.5 * g };
            }
            a[(i, j)] = prod;
        }
    }
    Ok(a)
}

/// The same transition assembled as an iterated Kronecker product of the
/// per-component 2x2 kernels `[[1 - g/2, g/2], [g/2, 1 - g/2]]`.
pub fn msm_transition_kronecker(params: &MsmParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    if params.k_bar > DENSE_K_LIMIT {
        return Err(AmlError::StateSpaceTooLarge {
            k_bar: params.k_bar,
            limit: DENSE_K_LIMIT,
        });
    }
    let mut m = DMatrix::from_element(1, 1, 1.0);
    for g in params.gammas() {
        let kernel =
            DMatrix::from_row_slice(2, 2, &[1.0 - 0.5 * g, 0.5 * g, 0.5 * g, 1.0 - 0.5 * g]);
        m = kernel.kronecker(&m);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k_bar: usize) -> MsmParams {
        MsmParams::new(1.4, 0.3, 2.5, 0.01, k_bar).unwrap()
    }

    #[test]
    fn rows_sum_to_one() {
        for k in 1..=6 {
            let a = msm_transition(&params(k)).unwrap();
            for i in 0..a.nrows() {
                let s: f64 = a.row(i).sum();
                assert!((s - 1.0).abs() < 1e-14, "row {i} sums to {s} at k_bar {k}");
            }
        }
    }

    #[test]
    fn single_component_kernel_is_explicit() {
        let p = MsmParams::new(1.5, 0.4, 2.0, 1.0, 1).unwrap();
        let a = msm_transition(&p).unwrap();
        let g = 0.4;
        assert_eq!(a[(0, 0)], 1.0 - 0.5 * g);
        assert_eq!(a[(0, 1)], 0.5 * g);
        assert_eq!(a[(1, 0)], 0.5 * g);
        assert_eq!(a[(1, 1)], 1.0 - 0.5 * g);
    }

    #[test]
    fn two_component_matrix_matches_brute_force_enumeration() {
        // Independent oracle: enumerate all 16 (i, j) pairs from the
        // definition, with its own bit conventions.
        let p = params(2);
        let g = p.gammas();
        let a = msm_transition(&p).unwrap();
        for i in 0..4usize {
            for j in 0..4usize {
                let bits = |s: usize| [(s & 1) as u8, ((s >> 1) & 1) as u8];
                let (bi, bj) = (bits(i), bits(j));
                let mut expect = 1.0;
                for k in 0..2 {
                    expect *= if bi[k] == bj[k] {
                        1.0 - g[k] / 2.0
                    } else {
                        g[k] / 2.0
                    };
                }
                assert!(
                    (a[(i, j)] - expect).abs() < 1e-15,
                    "entry ({i},{j}): {} vs {expect}",
                    a[(i, j)]
                );
            }
        }
    }

    #[test]
    fn kronecker_equals_direct_construction() {
        for k in 1..=6 {
            let p = params(k);
            let direct = msm_transition(&p).unwrap();
            let kron = msm_transition_kronecker(&p).unwrap();
            assert_eq!(direct, kron, "k_bar = {k}");
        }
    }

    #[test]
    fn dense_guard_rejects_large_state_spaces() {
        let p = MsmParams::new(1.4, 0.3, 2.5, 0.01, DENSE_K_LIMIT + 1).unwrap();
        assert!(matches!(
            msm_transition(&p),
            Err(AmlError::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn gammas_increase_toward_the_fastest_component() {
        let p = params(4);
        let g = p.gammas();
        assert!((g[3] - 0.3).abs() < 1e-15, "gamma_kbar = gamma_bar");
        for w in g.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
