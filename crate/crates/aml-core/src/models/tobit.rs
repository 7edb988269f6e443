//! Generalized Tobit (type-2 selection) with logistic selection.
//!
//! A latent outcome `y1* = x'theta1 + sigma e` is observed only when a
//! selection variable is positive; the selection probability given the
//! latent outcome is logistic in `z'theta2 + theta3 y1*`. The parameter
//! `theta3` couples outcome and selection; pinning `theta3 = 0` makes
//! outcome and selection independent and the log-likelihood separable into
//! a Gaussian part on observed units and a logistic part on the selection
//! indicator.

use crate::engine::{Dataset, Model, ParamVector};
use crate::error::{AmlError, Result};
use crate::numerics::rng::RngStream;
use nalgebra::DMatrix;

/// Structural parameters, ordered (theta1, theta2, theta3, sigma).
#[derive(Clone, Debug, PartialEq)]
pub struct TobitParams {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub theta3: f64,
    pub sigma: f64,
}

impl TobitParams {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.theta1.clone();
        v.extend_from_slice(&self.theta2);
        v.push(self.theta3);
        v.push(self.sigma);
        v
    }

    pub fn from_slice(v: &[f64], p1: usize, p2: usize) -> Self {
        Self {
            theta1: v[..p1].to_vec(),
            theta2: v[p1..p1 + p2].to_vec(),
            theta3: v[p1 + p2],
            sigma: v[p1 + p2 + 1],
        }
    }
}

/// Tobit model instance: holds the exogenous designs, since simulation
/// conditions on the observed regressors.
pub struct TobitModel {
    /// Outcome design, n x p1.
    pub x: DMatrix<f64>,
    /// Selection design, n x p2.
    pub z: DMatrix<f64>,
}

fn ln_1p_exp(v: f64) -> f64 {
    if v > 35.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

/// 1 / (1 + e^v), computed without overflow.
fn inv_1p_exp(v: f64) -> f64 {
    if v > 35.0 {
        (-v).exp() // ~ e^{-v}
    } else {
        1.0 / (1.0 + v.exp())
    }
}

impl TobitModel {
    pub fn new(x: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != z.nrows() {
            return Err(AmlError::Config(
                "outcome and selection designs must have equal row counts".into(),
            ));
        }
        Ok(Self { x, z })
    }

    /// The benchmark design: outcome regressors `x = (1, u)` and selection
    /// regressors `z = (1, v)` with independent `u, v ~ U[0,1]` per unit.
    ///
    /// Sharing one draw (`x = z`) makes the dependence direction of the
    /// pseudo-score an exact linear combination of the selection-block
    /// first-order conditions (write the dependence component as
    /// `theta1' (selection FOC) + sum of residuals weighted by a logistic
    /// function of the *same* regressors): the matching system then has a
    /// one-dimensional solution manifold and the dependence parameter is
    /// unidentified. Independent draws break the collinearity.
    pub fn uniform_design(n: usize, stream: &mut RngStream) -> Self {
        let mut x = DMatrix::zeros(n, 2);
        let mut z = DMatrix::zeros(n, 2);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = stream.uniform();
            z[(i, 0)] = 1.0;
            z[(i, 1)] = stream.uniform();
        }
        Self { x, z }
    }

    /// Single-draw variant (`x = z`); kept for studying the degenerate
    /// design.
    pub fn shared_uniform_design(n: usize, stream: &mut RngStream) -> Self {
        let mut x = DMatrix::zeros(n, 2);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = stream.uniform();
        }
        Self { z: x.clone(), x }
    }

    pub fn p1(&self) -> usize {
        self.x.ncols()
    }

    pub fn p2(&self) -> usize {
        self.z.ncols()
    }

    fn dims(&self) -> usize {
        self.p1() + self.p2() + 2
    }

    fn row_dot(m: &DMatrix<f64>, i: usize, coef: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            acc += m[(i, j)] * coef[j];
        }
        acc
    }

    /// Simulate latent outcomes and selection indicators at `params`.
    /// Draw order per unit: one standard normal, one uniform.
    pub fn simulate_latent(
        &self,
        params: &TobitParams,
        stream: &mut RngStream,
    ) -> (Vec<f64>, Vec<bool>) {
        let n = self.x.nrows();
        let mut y1 = Vec::with_capacity(n);
        let mut obs = Vec::with_capacity(n);
        for i in 0..n {
            let mean = Self::row_dot(&self.x, i, &params.theta1);
            let y_star = mean + params.sigma * stream.standard_normal();
            let index = Self::row_dot(&self.z, i, &params.theta2) + params.theta3 * y_star;
            let p_obs = 1.0 - inv_1p_exp(index); // 1/(1+e^{-index})
            let observed = stream.uniform() < p_obs;
            y1.push(y_star);
            obs.push(observed);
        }
        (y1, obs)
    }
}

impl Model for TobitModel {
    fn name(&self) -> &'static str {
        "tobit"
    }

    fn param_template(&self) -> ParamVector {
        let mut names: Vec<String> = (0..self.p1()).map(|j| format!("theta1{}", j + 1)).collect();
        names.extend((0..self.p2()).map(|j| format!("theta2{}", j + 1)));
        names.push("theta3".into());
        names.push("sigma".into());
        let p = self.dims();
        let mut fixed = vec![false; p];
        fixed[p - 2] = true; // theta3 pinned at zero in the constrained set
        let mut values = vec![0.0; p];
        values[p - 1] = 1.0;
        ParamVector::new(names, values, fixed, vec![0.0; p], vec![false; p]).expect("aligned")
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let p = self.dims();
        let mut b = vec![(-50.0, 50.0); p];
        b[p - 1] = (1e-6, 1e3); // sigma > 0
        b
    }

    fn loglik_constrained(&self, beta: &[f64], data: &Dataset) -> Result<f64> {
        let pars = TobitParams::from_slice(beta, self.p1(), self.p2());
        if pars.sigma <= 0.0 {
            return Err(AmlError::InvalidParam("sigma must be positive".into()));
        }
        let n = data.len() as f64;
        let s2 = pars.sigma * pars.sigma;
        let half_log = 0.5 * (2.0 * std::f64::consts::PI * s2).ln();
        let mut ll = 0.0;
        for i in 0..data.len() {
            let zi = Self::row_dot(&self.z, i, &pars.theta2);
            if data.is_observed(i) {
                let e = data.raw()[i] - Self::row_dot(&self.x, i, &pars.theta1);
                ll += -half_log - e * e / (2.0 * s2) - ln_1p_exp(-zi);
            } else {
                ll += -ln_1p_exp(zi);
            }
        }
        Ok(ll / n)
    }

    fn pseudo_score(&self, beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        let c = self.score_contributions(beta, data)?;
        let n = c.nrows() as f64;
        Ok((0..c.ncols()).map(|j| c.column(j).sum() / n).collect())
    }

    fn score_contributions(&self, beta: &[f64], data: &Dataset) -> Result<DMatrix<f64>> {
        let pars = TobitParams::from_slice(beta, self.p1(), self.p2());
        if pars.sigma <= 0.0 {
            return Err(AmlError::InvalidParam("sigma must be positive".into()));
        }
        let (p1, p2) = (self.p1(), self.p2());
        let p = self.dims();
        let s2 = pars.sigma * pars.sigma;
        let s3 = s2 * pars.sigma;
        let mut out = DMatrix::zeros(data.len(), p);
        for i in 0..data.len() {
            let zi = Self::row_dot(&self.z, i, &pars.theta2);
            let xt1 = Self::row_dot(&self.x, i, &pars.theta1);
            if data.is_observed(i) {
                let y = data.raw()[i];
                let e = y - xt1;
                // Gaussian part: the maximizing score carries +x e / sigma^2.
                let w = inv_1p_exp(zi); // 1/(1+e^{z})
                for j in 0..p1 {
                    out[(i, j)] = self.x[(i, j)] * e / s2;
                }
                for j in 0..p2 {
                    out[(i, p1 + j)] = self.z[(i, j)] * w;
                }
                out[(i, p1 + p2)] = y * w;
                out[(i, p1 + p2 + 1)] = -1.0 / pars.sigma + e * e / s3;
            } else {
                let w = inv_1p_exp(-zi); // 1/(1+e^{-z})
                for j in 0..p2 {
                    out[(i, p1 + j)] = -self.z[(i, j)] * w;
                }
                out[(i, p1 + p2)] = -xt1 * w;
            }
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
        let pars = TobitParams::from_slice(theta, self.p1(), self.p2());
        if pars.sigma <= 0.0 {
            return Err(AmlError::Simulation {
                theta: theta.to_vec(),
                reason: "sigma must be positive".into(),
            });
        }
        let (y1, obs) = self.simulate_latent(&pars, stream);
        let y = y1
            .iter()
            .zip(&obs)
            .map(|(v, &o)| if o { *v } else { 0.0 })
            .collect();
        Ok(Dataset::censored(y, obs))
    }

    /// Simulated-path score with the selection draw integrated out: each
    /// unit contributes the probability-weighted blend of its observed-type
    /// and missing-type rows, with the selection probability evaluated at
    /// the simulating parameters. Equal in expectation to scoring a realized
    /// path, but exactly smooth in `theta`.
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
        let sim = TobitParams::from_slice(theta, self.p1(), self.p2());
        let score_at = TobitParams::from_slice(beta, self.p1(), self.p2());
        if sim.sigma <= 0.0 || score_at.sigma <= 0.0 {
            return Err(AmlError::Simulation {
                theta: theta.to_vec(),
                reason: "sigma must be positive".into(),
            });
        }
        let (p1, p2) = (self.p1(), self.p2());
        let p = self.dims();
        let s2 = score_at.sigma * score_at.sigma;
        let s3 = s2 * score_at.sigma;
        let mut acc = vec![0.0; p];
        for i in 0..len {
            let mean_sim = Self::row_dot(&self.x, i, &sim.theta1);
            let y_star = mean_sim + sim.sigma * stream.standard_normal();
            let sel_index =
                Self::row_dot(&self.z, i, &sim.theta2) + sim.theta3 * y_star;
            let p_obs = 1.0 - inv_1p_exp(sel_index);

            let zi = Self::row_dot(&self.z, i, &score_at.theta2);
            let xt1 = Self::row_dot(&self.x, i, &score_at.theta1);
            let w_obs = inv_1p_exp(zi);
            let w_mis = inv_1p_exp(-zi);
            let e = y_star - xt1;
            for j in 0..p1 {
                acc[j] += p_obs * self.x[(i, j)] * e / s2;
            }
            for j in 0..p2 {
                acc[p1 + j] += self.z[(i, j)] * (p_obs * w_obs - (1.0 - p_obs) * w_mis);
            }
            acc[p1 + p2] += p_obs * y_star * w_obs - (1.0 - p_obs) * xt1 * w_mis;
            acc[p1 + p2 + 1] += p_obs * (-1.0 / score_at.sigma + e * e / s3);
        }
        for v in acc.iter_mut() {
            *v /= len as f64;
        }
        Ok(acc)
    }

    fn fit_start(&self, data: &Dataset) -> Vec<f64> {
        // OLS of observed outcomes on x, residual dispersion for sigma.
        let obs_rows: Vec<usize> = (0..data.len()).filter(|&i| data.is_observed(i)).collect();
        let p1 = self.p1();
        let mut theta1 = vec![0.0; p1];
        let mut sigma = 1.0;
        if obs_rows.len() > p1 + 1 {
            let xs = DMatrix::from_fn(obs_rows.len(), p1, |r, c| self.x[(obs_rows[r], c)]);
            let ys =
                nalgebra::DVector::from_fn(obs_rows.len(), |r, _| data.raw()[obs_rows[r]]);
            if let Some(sol) = (xs.transpose() * &xs)
                .try_inverse()
                .map(|xx| xx * xs.transpose() * &ys)
            {
                theta1 = sol.iter().copied().collect();
                let resid = ys - xs * sol;
                sigma = (resid.norm_squared() / obs_rows.len() as f64).sqrt().max(1e-3);
            }
        }
        let mut start = theta1;
        start.extend(vec![0.0; self.p2()]);
        start.push(0.0); // theta3
        start.push(sigma);
        start
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::constrained_fit;
    use crate::numerics::diff::central_diff_gradient;
    use crate::numerics::optim::OptimConfig;
    use crate::stats;
    use approx::assert_relative_eq;

    /// The benchmark generating process: theta1 = theta2 = (0.1, 0.2),
    /// theta3 = 1, sigma = 0.5.
    pub fn benchmark_params() -> TobitParams {
        TobitParams {
            theta1: vec![0.1, 0.2],
            theta2: vec![0.1, 0.2],
            theta3: 1.0,
            sigma: 0.5,
        }
    }

    fn small_dataset(n: usize, seed: u64) -> (TobitModel, Dataset) {
        let mut stream = RngStream::new(seed, 0);
        let model = TobitModel::uniform_design(n, &mut stream);
        let data = model
            .simulate(&benchmark_params().to_vec(), n, &mut stream)
            .unwrap();
        (model, data)
    }

    /// Direct per-term re-implementation of the constrained log-likelihood,
    /// kept independent of the production path.
    fn loglik_oracle(model: &TobitModel, pars: &TobitParams, data: &Dataset) -> f64 {
        let n = data.len() as f64;
        let mut total = 0.0;
        for i in 0..data.len() {
            let z: f64 = (0..model.z.ncols())
                .map(|j| model.z[(i, j)] * pars.theta2[j])
                .sum();
            if data.is_observed(i) {
                let mean: f64 = (0..model.x.ncols())
                    .map(|j| model.x[(i, j)] * pars.theta1[j])
                    .sum();
                let e = data.raw()[i] - mean;
                total += -(0.5) * (2.0 * std::f64::consts::PI * pars.sigma * pars.sigma).ln()
                    - e * e / (2.0 * pars.sigma * pars.sigma)
                    - (1.0 + (-z).exp()).ln();
            } else {
                total += -(1.0 + z.exp()).ln();
            }
        }
        total / n
    }

    #[test]
    fn all_missing_with_zero_selection_gives_minus_log_two() {
        let x = DMatrix::from_element(4, 1, 1.0);
        let z = x.clone();
        let model = TobitModel::new(x, z).unwrap();
        let data = Dataset::censored(vec![0.0; 4], vec![false; 4]);
        let ll = model
            .loglik_constrained(&[0.3, 0.0, 0.0, 1.0], &data)
            .unwrap();
        assert_relative_eq!(ll, -(2.0f64).ln(), epsilon = 1e-14);
    }

    #[test]
    fn single_observed_unit_at_its_mean() {
        // y = x' theta1 and z' theta2 = 0: density term collapses to
        // -(1/2) log(2 pi sigma^2) - log 2.
        let x = DMatrix::from_element(1, 1, 2.0);
        let z = DMatrix::from_element(1, 1, 0.0);
        let model = TobitModel::new(x, z).unwrap();
        let sigma = 0.7;
        let data = Dataset::censored(vec![2.0 * 0.4], vec![true]);
        let ll = model
            .loglik_constrained(&[0.4, 0.9, 0.0, sigma], &data)
            .unwrap();
        let expect =
            -0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln() - (2.0f64).ln();
        assert_relative_eq!(ll, expect, epsilon = 1e-14);
    }

    #[test]
    fn loglik_matches_direct_summation_oracle() {
        let (model, data) = small_dataset(20, 3);
        let pars = TobitParams {
            theta1: vec![0.15, 0.1],
            theta2: vec![-0.2, 0.3],
            theta3: 0.0,
            sigma: 0.6,
        };
        let ll = model.loglik_constrained(&pars.to_vec(), &data).unwrap();
        assert_relative_eq!(ll, loglik_oracle(&model, &pars, &data), epsilon = 1e-12);
    }

    #[test]
    fn free_block_score_matches_finite_differences() {
        let (model, data) = small_dataset(50, 4);
        let beta = vec![0.2, 0.1, 0.05, 0.25, 0.0, 0.55];
        let score = model.pseudo_score(&beta, &data).unwrap();
        let fd = central_diff_gradient(
            |b| {
                // Perturb only the free block; theta3 stays pinned.
                let mut full = beta.clone();
                full[0] = b[0];
                full[1] = b[1];
                full[2] = b[2];
                full[3] = b[3];
                full[5] = b[4];
                model.loglik_constrained(&full, &data).unwrap()
            },
            &[beta[0], beta[1], beta[2], beta[3], beta[5]],
            1e-5,
        )
        .unwrap();
        for (analytic, numeric) in [score[0], score[1], score[2], score[3], score[5]]
            .iter()
            .zip(&fd)
        {
            assert_relative_eq!(analytic, numeric, max_relative = 1e-6, epsilon = 1e-10);
        }
    }

    #[test]
    fn free_block_score_matches_finite_differences_at_random_points() {
        let (model, data) = small_dataset(40, 8);
        let mut stream = RngStream::new(99, 0);
        for _ in 0..100 {
            let beta = vec![
                stream.standard_normal() * 0.5,
                stream.standard_normal() * 0.5,
                stream.standard_normal() * 0.5,
                stream.standard_normal() * 0.5,
                0.0,
                0.3 + stream.uniform(),
            ];
            let score = model.pseudo_score(&beta, &data).unwrap();
            let free = [beta[0], beta[1], beta[2], beta[3], beta[5]];
            let fd = central_diff_gradient(
                |b| {
                    let full = vec![b[0], b[1], b[2], b[3], 0.0, b[4]];
                    model.loglik_constrained(&full, &data).unwrap()
                },
                &free,
                1e-5,
            )
            .unwrap();
            for (analytic, numeric) in [score[0], score[1], score[2], score[3], score[5]]
                .iter()
                .zip(&fd)
            {
                assert_relative_eq!(analytic, numeric, max_relative = 1e-5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn free_directions_vanish_at_the_constrained_mle() {
        let (model, data) = small_dataset(400, 5);
        let beta = constrained_fit(&model, &data, &OptimConfig::for_likelihood()).unwrap();
        let score = model.pseudo_score(beta.values(), &data).unwrap();
        for j in [0usize, 1, 2, 3, 5] {
            assert!(
                score[j].abs() < 5e-5,
                "component {j} = {} at the MLE",
                score[j]
            );
        }
    }

    #[test]
    fn dependence_direction_signals_the_violated_constraint() {
        // Data generated at theta3 = 1; the theta3 score component at the
        // constrained MLE should be positive on average.
        let reps = 30;
        let mut means = Vec::new();
        for r in 0..reps {
            let mut stream = RngStream::new(700 + r, 0);
            let model = TobitModel::uniform_design(2500, &mut stream);
            let data = model
                .simulate(&benchmark_params().to_vec(), 2500, &mut stream)
                .unwrap();
            let beta = constrained_fit(&model, &data, &OptimConfig::for_likelihood()).unwrap();
            let score = model.pseudo_score(beta.values(), &data).unwrap();
            means.push(score[4]);
        }
        let m = stats::mean(&means);
        let se = stats::sd(&means) / (reps as f64).sqrt();
        assert!(m > 3.0 * se, "theta3 score mean {m} (se {se})");
    }

    #[test]
    fn half_observed_when_selection_index_is_zero() {
        let n = 10_000;
        let mut stream = RngStream::new(6, 0);
        let model = TobitModel::uniform_design(n, &mut stream);
        let pars = TobitParams {
            theta1: vec![0.1, 0.2],
            theta2: vec![0.0, 0.0],
            theta3: 0.0,
            sigma: 0.5,
        };
        let data = model.simulate(&pars.to_vec(), n, &mut stream).unwrap();
        let frac = data.observed_count() as f64 / n as f64;
        let se = stats::binomial_se(0.5, n);
        assert!((frac - 0.5).abs() < 3.0 * se, "frac = {frac}");
    }

    #[test]
    fn selection_independent_of_noise_under_the_constraint() {
        let n = 20_000;
        let mut stream = RngStream::new(7, 0);
        let model = TobitModel::uniform_design(n, &mut stream);
        let pars = TobitParams {
            theta1: vec![0.1, 0.2],
            theta2: vec![0.3, -0.1],
            theta3: 0.0,
            sigma: 0.5,
        };
        let (y1, obs) = model.simulate_latent(&pars, &mut stream);
        // Correlation between the selection indicator and the Gaussian noise.
        let eps: Vec<f64> = (0..n)
            .map(|i| {
                let mean = model.x[(i, 0)] * 0.1 + model.x[(i, 1)] * 0.2;
                (y1[i] - mean) / 0.5
            })
            .collect();
        let sel: Vec<f64> = obs.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let me = stats::mean(&eps);
        let ms = stats::mean(&sel);
        let cov: f64 = eps
            .iter()
            .zip(&sel)
            .map(|(e, s)| (e - me) * (s - ms))
            .sum::<f64>()
            / n as f64;
        let corr = cov / (stats::sd(&eps) * stats::sd(&sel));
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn observed_fraction_matches_monte_carlo_oracle_at_benchmark_truth() {
        // Oracle: estimate E[Pr(observed)] for the benchmark design by brute
        // force over fresh draws.
        let pars = benchmark_params();
        let mut oracle_stream = RngStream::new(8, 1);
        let m = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..m {
            let u: f64 = oracle_stream.uniform();
            let v: f64 = oracle_stream.uniform();
            let y_star = 0.1 + 0.2 * u + 0.5 * oracle_stream.standard_normal();
            let idx = 0.1 + 0.2 * v + 1.0 * y_star;
            acc += 1.0 / (1.0 + (-idx).exp());
        }
        let p_oracle = acc / m as f64;

        let n = 10_000;
        let mut stream = RngStream::new(8, 0);
        let model = TobitModel::uniform_design(n, &mut stream);
        let data = model.simulate(&pars.to_vec(), n, &mut stream).unwrap();
        let frac = data.observed_count() as f64 / n as f64;
        let se = (stats::binomial_se(p_oracle, n).powi(2) + p_oracle * (1.0 - p_oracle) / m as f64)
            .sqrt();
        assert!(
            (frac - p_oracle).abs() < 3.0 * se,
            "frac = {frac}, oracle = {p_oracle}"
        );
    }
}
