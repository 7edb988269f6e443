//! Stable-distribution estimation via a Cauchy-constrained pseudo-score.
//!
//! The stable family `(a, b, c, mu)` has a closed-form likelihood only at
//! special parameter points. Pinning `(a, b) = (1, 0)` gives the Cauchy
//! likelihood; the pseudo-score augments the analytic Cauchy `(c, mu)` score
//! with two likelihood differences that proxy the `a` and `b` directions:
//! a Normal(mu, 2c^2) likelihood for the step to `a = 2`, and a
//! Landau-approximation likelihood (Behrens-Melissinos closed form) for the
//! step to `b = 1`. Sampling uses the Chambers-Mallows-Stuck transform.

use crate::engine::{Dataset, Model, ParamVector};
use crate::error::{AmlError, Result};
use crate::numerics::rng::RngStream;
use crate::stats;
use nalgebra::DMatrix;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub mu: f64,
}

impl StableParams {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.a, self.b, self.c, self.mu]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            a: v[0],
            b: v[1],
            c: v[2],
            mu: v[3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 2.0) {
            return Err(AmlError::InvalidParam(format!(
                "stability parameter must lie in (0, 2], got {}",
                self.a
            )));
        }
        if !(-1.0..=1.0).contains(&self.b) {
            return Err(AmlError::InvalidParam(format!(
                "skewness parameter must lie in [-1, 1], got {}",
                self.b
            )));
        }
        if self.c <= 0.0 {
            return Err(AmlError::InvalidParam("scale must be positive".into()));
        }
        Ok(())
    }
}

/// Average Cauchy log-likelihood with location `mu` and scale `c`.
pub fn cauchy_loglik(c: f64, mu: f64, y: &[f64]) -> f64 {
    let t = y.len() as f64;
    let mut acc = 0.0;
    for &v in y {
        let w = (v - mu) / c;
        acc += (1.0 + w * w).ln();
    }
    -(PI * c).ln() - acc / t
}

/// Average Normal(mu, 2c^2) log-likelihood, the `a = 2` endpoint.
pub fn normal_loglik(c: f64, mu: f64, y: &[f64]) -> f64 {
    let var = 2.0 * c * c;
    let t = y.len() as f64;
    let ss: f64 = y.iter().map(|v| (v - mu) * (v - mu)).sum();
    -0.5 * (2.0 * PI * var).ln() - ss / (2.0 * var * t)
}

/// Log of the closed-form Landau density approximation with location `mu`
/// and scale `c`: `f(y) = exp{-w/2 - e^{-w}/2} / (sqrt(2 pi) c)`, `w = (y-mu)/c`.
/// The inner exponent is capped so extreme left-tail observations stay finite.
pub fn landau_log_density(c: f64, mu: f64, y: f64) -> f64 {
    let w = (y - mu) / c;
    let spike = (-w).min(700.0).exp();
    -0.5 * (2.0 * PI).ln() - c.ln() - 0.5 * w - 0.5 * spike
}

/// Average Landau-approximation log-likelihood, the `b = 1` endpoint.
pub fn landau_loglik(c: f64, mu: f64, y: &[f64]) -> f64 {
    y.iter().map(|&v| landau_log_density(c, mu, v)).sum::<f64>() / y.len() as f64
}

/// One Chambers-Mallows-Stuck draw from the standard stable law, scaled and
/// shifted to `(a, b, c, mu)`. Consumes one uniform angle and one exponential.
pub fn cms_draw(p: &StableParams, stream: &mut RngStream) -> f64 {
    let u = stream.uniform_angle();
    let w = stream.exp1().max(1e-300);
    if (p.a - 1.0).abs() < 1e-8 {
        let half_pi = PI / 2.0;
        let bu = half_pi + p.b * u;
        let x = (bu * u.tan() - p.b * ((half_pi * w * u.cos()) / bu).ln()) / half_pi;
        p.c * x + p.mu + 2.0 / PI * p.b * p.c * p.c.ln()
    } else {
        let ta = (PI * p.a / 2.0).tan();
        let bb = (p.b * ta).atan() / p.a;
        let s = (1.0 + p.b * p.b * ta * ta).powf(1.0 / (2.0 * p.a));
        let cu = u.cos();
        let x = s * (p.a * (u + bb)).sin() / cu.powf(1.0 / p.a)
            * ((u - p.a * (u + bb)).cos() / w).powf((1.0 - p.a) / p.a);
        p.c * x + p.mu
    }
}

/// Stable model plug-in: i.i.d. observations, constraint `(a, b) = (1, 0)`.
pub struct StableModel;

/// Full pseudo-score at the Cauchy-constrained point, ordered `(a, b, c, mu)`:
/// two likelihood differences and the analytic Cauchy score.
pub fn stable_pseudo_score(c: f64, mu: f64, y: &[f64]) -> Vec<f64> {
    let base = cauchy_loglik(c, mu, y);
    let t = y.len() as f64;
    let mut dc = 0.0;
    let mut dmu = 0.0;
    for &v in y {
        let d = v - mu;
        let denom = c * c + d * d;
        dc += 2.0 * d * d / (c * denom);
        dmu += 2.0 * d / denom;
    }
    vec![
        normal_loglik(c, mu, y) - base,
        landau_loglik(c, mu, y) - base,
        -1.0 / c + dc / t,
        dmu / t,
    ]
}

impl Model for StableModel {
    fn name(&self) -> &'static str {
        "stable"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::new(
            vec!["a".into(), "b".into(), "c".into(), "mu".into()],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![true, true, false, false],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![false; 4],
        )
        .expect("aligned")
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.1, 2.0), (-1.0, 1.0), (1e-8, 1e3), (-1e3, 1e3)]
    }

    fn loglik_constrained(&self, beta: &[f64], data: &Dataset) -> Result<f64> {
        let p = StableParams::from_slice(beta);
        p.validate()?;
        Ok(cauchy_loglik(p.c, p.mu, data.values()?))
    }

    fn pseudo_score(&self, beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        let p = StableParams::from_slice(beta);
        p.validate()?;
        Ok(stable_pseudo_score(p.c, p.mu, data.values()?))
    }

    fn score_contributions(&self, beta: &[f64], data: &Dataset) -> Result<DMatrix<f64>> {
        let p = StableParams::from_slice(beta);
        p.validate()?;
        let y = data.values()?;
        let mut out = DMatrix::zeros(y.len(), 4);
        let var2 = 2.0 * p.c * p.c;
        for (i, &v) in y.iter().enumerate() {
            let d = v - p.mu;
            let w = d / p.c;
            let log_cauchy = -(PI * p.c).ln() - (1.0 + w * w).ln();
            let log_normal = -0.5 * (2.0 * PI * var2).ln() - d * d / (2.0 * var2);
            out[(i, 0)] = log_normal - log_cauchy;
            out[(i, 1)] = landau_log_density(p.c, p.mu, v) - log_cauchy;
            out[(i, 2)] = -1.0 / p.c + 2.0 * d * d / (p.c * (p.c * p.c + d * d));
            out[(i, 3)] = 2.0 * d / (p.c * p.c + d * d);
        }
        Ok(out)
    }

    fn simulate(&self, theta: &[f64], len: usize, stream: &mut RngStream) -> Result<Dataset> {
        let p = StableParams::from_slice(theta);
        p.validate().map_err(|e| AmlError::Simulation {
            theta: theta.to_vec(),
            reason: e.to_string(),
        })?;
        Ok(Dataset::series(
            (0..len).map(|_| cms_draw(&p, stream)).collect(),
        ))
    }

    fn fit_start(&self, data: &Dataset) -> Vec<f64> {
        // Robust Cauchy starts: median location, half-interquartile scale.
        let y = data.raw();
        let mu = stats::median(y);
        let c = (0.5 * (stats::quantile(y, 0.75) - stats::quantile(y, 0.25))).max(1e-6);
        vec![1.0, 0.0, c, mu]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::constrained_fit;
    use crate::numerics::diff::central_diff_gradient;
    use crate::numerics::optim::OptimConfig;
    use crate::numerics::quad::{integrate, QuadratureRule};
    use approx::assert_relative_eq;

    #[test]
    fn single_observation_at_the_location() {
        let ll = cauchy_loglik(0.4, 1.3, &[1.3]);
        assert_relative_eq!(ll, -(PI * 0.4).ln(), epsilon = 1e-14);
    }

    #[test]
    fn cauchy_loglik_matches_direct_density_sum() {
        let mut s = RngStream::new(31, 0);
        let y: Vec<f64> = (0..200).map(|_| s.standard_normal() * 2.0).collect();
        let (c, mu) = (0.8, -0.2);
        let direct: f64 = y
            .iter()
            .map(|&v| (c / (PI * (c * c + (v - mu) * (v - mu)))).ln())
            .sum::<f64>()
            / y.len() as f64;
        assert_relative_eq!(cauchy_loglik(c, mu, &y), direct, epsilon = 1e-12);
    }

    #[test]
    fn location_equivariance() {
        let mut s = RngStream::new(32, 0);
        let y: Vec<f64> = (0..100).map(|_| s.standard_normal()).collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + 5.5).collect();
        let base = cauchy_loglik(0.3, 0.1, &y);
        let moved = cauchy_loglik(0.3, 0.1 + 5.5, &shifted);
        assert_relative_eq!(base, moved, epsilon = 1e-14);
    }

    #[test]
    fn scale_and_location_scores_match_finite_differences() {
        let mut s = RngStream::new(33, 0);
        let p = StableParams {
            a: 1.0,
            b: 0.0,
            c: 0.25,
            mu: 0.1,
        };
        let y: Vec<f64> = (0..500).map(|_| cms_draw(&p, &mut s)).collect();
        let score = stable_pseudo_score(0.3, 0.05, &y);
        let fd = central_diff_gradient(
            |x| cauchy_loglik(x[0], x[1], &y),
            &[0.3, 0.05],
            1e-5,
        )
        .unwrap();
        assert_relative_eq!(score[2], fd[0], max_relative = 1e-6);
        assert_relative_eq!(score[3], fd[1], max_relative = 1e-6, epsilon = 1e-9);
    }

    #[test]
    fn scale_and_location_scores_vanish_at_the_cauchy_mle() {
        let mut s = RngStream::new(34, 0);
        let p = StableParams {
            a: 1.0,
            b: 0.0,
            c: 0.2,
            mu: -0.4,
        };
        let y: Vec<f64> = (0..4000).map(|_| cms_draw(&p, &mut s)).collect();
        let model = StableModel;
        let data = Dataset::series(y.clone());
        let beta = constrained_fit(&model, &data, &OptimConfig::for_likelihood()).unwrap();
        let score = stable_pseudo_score(beta.values()[2], beta.values()[3], &y);
        assert!(score[2].abs() < 1e-5, "c score {}", score[2]);
        assert!(score[3].abs() < 1e-5, "mu score {}", score[3]);
    }

    #[test]
    fn landau_density_at_the_location() {
        let c = 0.7;
        let f = landau_log_density(c, 2.0, 2.0).exp();
        assert_relative_eq!(
            f,
            (-0.5f64).exp() / ((2.0 * PI).sqrt() * c),
            max_relative = 1e-12
        );
    }

    #[test]
    fn landau_density_integrates_to_one_within_two_percent() {
        let (c, mu) = (0.5, 1.0);
        let mass = integrate(
            |y| landau_log_density(c, mu, y).exp(),
            mu - 20.0 * c,
            mu + 200.0 * c,
            &QuadratureRule::default(),
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 0.02, "mass = {mass}");
    }

    #[test]
    fn landau_density_is_strictly_positive_on_a_compact_box() {
        for y in [-5.0, -1.0, 0.0, 1.0, 10.0, 100.0] {
            assert!(landau_log_density(0.3, 0.0, y).is_finite());
        }
    }

    #[test]
    fn pseudo_score_is_finite_near_the_benchmark_truth() {
        let p = StableParams {
            a: 1.8,
            b: -0.1,
            c: 0.1,
            mu: 0.0,
        };
        let mut s = RngStream::new(35, 0);
        let y: Vec<f64> = (0..5000).map(|_| cms_draw(&p, &mut s)).collect();
        for c in [0.05, 0.1, 0.2] {
            for mu in [-0.05, 0.0, 0.05] {
                let score = stable_pseudo_score(c, mu, &y);
                assert!(score.iter().all(|v| v.is_finite()), "score {score:?}");
            }
        }
    }

    #[test]
    fn gaussian_endpoint_passes_kolmogorov_smirnov() {
        let p = StableParams {
            a: 2.0,
            b: 0.3, // irrelevant at a = 2
            c: 0.5,
            mu: 1.0,
        };
        let mut s = RngStream::new(36, 0);
        let y: Vec<f64> = (0..100_000).map(|_| cms_draw(&p, &mut s)).collect();
        let sd = (2.0f64).sqrt() * p.c;
        let d = stats::ks_statistic(&y, |x| stats::normal_cdf((x - p.mu) / sd));
        let pv = stats::ks_pvalue(d, y.len());
        assert!(pv > 0.01, "KS p-value = {pv}");
        // Sample variance check: Var = 2 c^2.
        let var = stats::variance(&y);
        let se = (2.0f64 / y.len() as f64).sqrt() * 2.0 * p.c * p.c;
        assert!((var - 0.5).abs() < 3.0 * se, "var = {var}");
    }

    #[test]
    fn cauchy_endpoint_passes_kolmogorov_smirnov() {
        let p = StableParams {
            a: 1.0,
            b: 0.0,
            c: 0.7,
            mu: -0.3,
        };
        let mut s = RngStream::new(37, 0);
        let y: Vec<f64> = (0..100_000).map(|_| cms_draw(&p, &mut s)).collect();
        let d = stats::ks_statistic(&y, |x| 0.5 + ((x - p.mu) / p.c).atan() / PI);
        let pv = stats::ks_pvalue(d, y.len());
        assert!(pv > 0.01, "KS p-value = {pv}");
    }

    #[test]
    fn location_shift_moves_the_median() {
        let base = StableParams {
            a: 1.7,
            b: 0.2,
            c: 0.3,
            mu: 0.0,
        };
        let shifted = StableParams { mu: 2.0, ..base };
        let mut s1 = RngStream::new(38, 0);
        let mut s2 = RngStream::new(38, 0);
        let y1: Vec<f64> = (0..50_000).map(|_| cms_draw(&base, &mut s1)).collect();
        let y2: Vec<f64> = (0..50_000).map(|_| cms_draw(&shifted, &mut s2)).collect();
        let dm = stats::median(&y2) - stats::median(&y1);
        assert!((dm - 2.0).abs() < 0.02, "median shift = {dm}");
    }

    #[test]
    fn cms_is_deterministic_under_a_fixed_stream() {
        let p = StableParams {
            a: 1.5,
            b: -0.5,
            c: 1.0,
            mu: 0.0,
        };
        let draw = |seed| -> Vec<f64> {
            let mut s = RngStream::new(seed, 9);
            (0..64).map(|_| cms_draw(&p, &mut s)).collect()
        };
        assert_eq!(draw(77), draw(77));
    }
}
