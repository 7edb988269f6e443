//! ARCH-like stochastic volatility model.
//!
//! Returns follow `r_{t+1} = mu + sigma_t u_{t+1}` with
//! `sigma_t^2 = k_t + eta_t`, `k_t = omega + alpha eps_t^2` driven by
//! observed squared innovations, and a latent AR(1) volatility perturbation
//! `eta_t = rho eta_{t-1} + varpi chi_t` with Gaussian `chi`. Pinning
//! `rho = 0` factorizes the likelihood into univariate integrals over the
//! single-period perturbation, evaluated here by adaptive quadrature.
//!
//! The pseudo-score replaces filtered volatility functionals with an ARCH(1)
//! plug-in: quasi-maximum-likelihood ARCH(1) fitted values stand in for
//! `E[sigma_t^2 | r]` and its inverse powers.

use crate::engine::{Dataset, Model, ParamVector};
use crate::error::{AmlError, Result};
use crate::numerics::optim::{bfgs, OptimConfig};
use crate::numerics::quad::{integrate, QuadratureRule};
use crate::numerics::rng::RngStream;
use crate::stats;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Structural parameters, ordered (mu, omega, alpha, varpi, rho).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsvParams {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub varpi: f64,
    pub rho: f64,
}

impl GsvParams {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.mu, self.omega, self.alpha, self.varpi, self.rho]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            mu: v[0],
            omega: v[1],
            alpha: v[2],
            varpi: v[3],
            rho: v[4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega <= 0.0 {
            return Err(AmlError::InvalidParam("omega must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(AmlError::InvalidParam(
                "alpha must lie in [0, 1) for stationarity".into(),
            ));
        }
        if self.varpi <= 0.0 {
            return Err(AmlError::InvalidParam("varpi must be positive".into()));
        }
        if self.rho.abs() >= 1.0 {
            return Err(AmlError::InvalidParam(
                "rho must lie strictly inside (-1, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Plug-in volatility functionals per date: fitted variance and its inverse
/// powers. All strictly positive by construction.
#[derive(Clone, Debug)]
pub struct FilteredVol {
    pub sig2: Vec<f64>,
}

impl FilteredVol {
    pub fn inv_sig2(&self, t: usize) -> f64 {
        1.0 / self.sig2[t]
    }

    pub fn inv_sig4(&self, t: usize) -> f64 {
        1.0 / (self.sig2[t] * self.sig2[t])
    }
}

pub struct GsvModel {
    /// Lower bound applied to simulated variances.
    pub variance_floor: f64,
    pub quad: QuadratureRule,
}

impl Default for GsvModel {
    fn default() -> Self {
        Self {
            variance_floor: 1e-8,
            quad: QuadratureRule {
                abs_tol: 1e-12,
                rel_tol: 1e-8,
                max_subdivisions: 64,
                ..QuadratureRule::default()
            },
        }
    }
}

/// Simulate returns; also reports how many variance draws hit the floor.
pub fn gsv_simulate_with_diagnostics(
    params: &GsvParams,
    len: usize,
    floor: f64,
    stream: &mut RngStream,
) -> Result<(Vec<f64>, usize)> {
    params.validate()?;
    const BURN_IN: usize = 50;
    // Stationary start for the latent perturbation; squared innovations
    // start at their unconditional level.
    let mut eta = params.varpi * stream.standard_normal() / (1.0 - params.rho * params.rho).sqrt();
    let mut eps2 = params.omega / (1.0 - params.alpha);
    let mut floor_hits = 0usize;
    let mut out = Vec::with_capacity(len);
    for i in 0..len + BURN_IN {
        eta = params.rho * eta + params.varpi * stream.standard_normal();
        let k = params.omega + params.alpha * eps2;
        let mut var = k + eta;
        if var < floor {
            var = floor;
            floor_hits += 1;
        }
        let r = params.mu + var.sqrt() * stream.standard_normal();
        eps2 = (r - params.mu) * (r - params.mu);
        if i >= BURN_IN {
            out.push(r);
        }
    }
    Ok((out, floor_hits))
}

/// Average constrained (`rho = 0`) log-likelihood: each date contributes the
/// log of a univariate integral over the volatility perturbation,
/// conditioning on the first return.
pub fn gsv_loglik_constrained(
    zeta: &GsvParams,
    returns: &[f64],
    floor: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    zeta.validate()?;
    if returns.len() < 2 {
        return Err(AmlError::Config("need at least 2 returns".into()));
    }
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut total = 0.0;
    for t in 0..returns.len() - 1 {
        let eps = returns[t] - zeta.mu;
        let k = zeta.omega + zeta.alpha * eps * eps;
        let e_next = returns[t + 1] - zeta.mu;
        let lo = (floor - k).max(-8.0 * zeta.varpi);
        let hi = 8.0 * zeta.varpi;
        let increment = integrate(
            |eta| {
                let var = k + eta;
                let dens_r = norm / var.sqrt() * (-0.5 * e_next * e_next / var).exp();
                let z = eta / zeta.varpi;
                let dens_eta = norm / zeta.varpi * (-0.5 * z * z).exp();
                dens_r * dens_eta
            },
            lo,
            hi,
            rule,
        )
        .map_err(|e| AmlError::QuadratureAtDate {
            date: t,
            source: Box::new(e),
        })?;
        total += increment.max(f64::MIN_POSITIVE).ln();
    }
    Ok(total / (returns.len() - 1) as f64)
}

/// Gaussian quasi-maximum-likelihood ARCH(1) fit, the plug-in filter for the
/// volatility functionals: returns fitted variances
/// `sig2[t] = omega_hat + alpha_hat (r_t - mu_hat)^2` for `t = 0..T-2`.
pub fn gsv_filter_plugin(start: &GsvParams, returns: &[f64]) -> Result<FilteredVol> {
    if returns.len() < 10 {
        return Err(AmlError::Config("need at least 10 returns".into()));
    }
    let var = stats::variance(returns);
    let x0 = [
        start.mu,
        (0.7 * var).max(1e-12),
        0.2,
    ];
    let bounds = [(-1e3, 1e3), (1e-12, 1e3), (0.0, 0.999)];
    let neg_loglik = |p: &[f64]| {
        let (mu, omega, alpha) = (p[0], p[1], p[2]);
        let mut acc = 0.0;
        for t in 0..returns.len() - 1 {
            let e = returns[t] - mu;
            let v = omega + alpha * e * e;
            let en = returns[t + 1] - mu;
            acc += v.ln() + en * en / v;
        }
        0.5 * acc
    };
    let cfg = OptimConfig::for_likelihood();
    let out = bfgs(neg_loglik, &x0, &bounds, &cfg)
        .map_err(|e| AmlError::Optim(format!("plug-in volatility fit failed: {e}")))?;
    let (mu, omega, alpha) = (out.x[0], out.x[1], out.x[2]);
    let sig2 = (0..returns.len() - 1)
        .map(|t| {
            let e = returns[t] - mu;
            (omega + alpha * e * e).max(1e-12)
        })
        .collect();
    Ok(FilteredVol { sig2 })
}

/// Per-date pseudo-score contributions assembled from given volatility
/// functionals. Row `t` pairs the date-`t` information set with the return
/// at `t + 1`; the serial-dependence column starts at the second row.
pub fn gsv_score_contributions_with_filter(
    zeta: &GsvParams,
    returns: &[f64],
    filt: &FilteredVol,
) -> DMatrix<f64> {
    let rows = returns.len() - 1;
    debug_assert_eq!(filt.sig2.len(), rows);
    let mut out = DMatrix::zeros(rows, 5);
    let w3 = zeta.varpi * zeta.varpi * zeta.varpi;
    let w2 = zeta.varpi * zeta.varpi;
    let mut prev_resid = 0.0;
    for t in 0..rows {
        let eps = returns[t] - zeta.mu;
        let eps2 = eps * eps;
        let e_next = returns[t + 1] - zeta.mu;
        let i2 = filt.inv_sig2(t);
        let i4 = filt.inv_sig4(t);
        out[(t, 0)] = i2 * e_next;
        out[(t, 1)] = 0.5 * i2 - 0.5 * i4 * e_next * e_next;
        out[(t, 2)] = 0.5 * i2 * eps2 - 0.5 * i4 * e_next * e_next * eps2;
        let resid = filt.sig2[t] - zeta.omega - zeta.alpha * eps2;
        out[(t, 3)] = -1.0 / zeta.varpi + resid / w3;
        if t > 0 {
            out[(t, 4)] = resid * prev_resid / w2;
        }
        prev_resid = resid;
    }
    out
}

impl Model for GsvModel {
    fn name(&self) -> &'static str {
        "garch-sv"
    }

    fn param_template(&self) -> ParamVector {
        ParamVector::new(
            vec![
                "mu".into(),
                "omega".into(),
                "alpha".into(),
                "varpi".into(),
                "rho".into(),
            ],
            vec![0.0, 0.1, 0.2, 0.02, 0.0],
            vec![false, false, false, false, true],
            vec![0.0; 5],
            vec![false; 5],
        )
        .expect("aligned")
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![
            (-10.0, 10.0),
            (1e-6, 10.0),
            (0.0, 0.95),
            (1e-6, 10.0),
            (-0.95, 0.95),
        ]
    }

    fn loglik_constrained(&self, beta: &[f64], data: &Dataset) -> Result<f64> {
        let p = GsvParams::from_slice(beta);
        gsv_loglik_constrained(&p, data.values()?, self.variance_floor, &self.quad)
    }

    fn pseudo_score(&self, beta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        let c = self.score_contributions(beta, data)?;
        let n = c.nrows() as f64;
        Ok((0..5).map(|j| c.column(j).sum() / n).collect())
    }

    fn score_contributions(&self, beta: &[f64], data: &Dataset) -> Result<DMatrix<f64>> {
        let p = GsvParams::from_slice(beta);
        p.validate()?;
        let returns = data.values()?;
        let filt = gsv_filter_plugin(&p, returns)?;
        Ok(gsv_score_contributions_with_filter(&p, returns, &filt))
    }

    fn simulate(&self, theta: &[f64], len: usize, stream: &mut RngStream) -> Result<Dataset> {
        let p = GsvParams::from_slice(theta);
        let (r, _) = gsv_simulate_with_diagnostics(&p, len, self.variance_floor, stream)
            .map_err(|e| AmlError::Simulation {
                theta: theta.to_vec(),
                reason: e.to_string(),
            })?;
        Ok(Dataset::series(r))
    }

    fn fit_start(&self, data: &Dataset) -> Vec<f64> {
        let r = data.raw();
        let var = stats::variance(r).max(1e-10);
        vec![stats::mean(r), 0.7 * var, 0.2, (0.2 * var).max(1e-6), 0.0]
    }

    fn lrv_lags(&self, t: usize) -> usize {
        crate::numerics::hac::bartlett_default_lags(t)
    }

    /// The plug-in volatility fit inside the score introduces optimizer
    /// -termination jitter; derivative steps must dominate it.
    fn criterion_fd_step(&self) -> f64 {
        1e-3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn preset() -> GsvParams {
        GsvParams {
            mu: 0.0,
            omega: 0.1,
            alpha: 0.2,
            varpi: 0.02,
            rho: 0.0,
        }
    }

    #[test]
    fn pure_arch_regression_slope_recovers_alpha() {
        // varpi ~ 0, rho = 0: squared innovations follow an exact ARCH(1),
        // so E[eps_{t+1}^2 | eps_t^2] = omega + alpha eps_t^2.
        let p = GsvParams {
            varpi: 1e-8,
            ..preset()
        };
        let mut stream = RngStream::new(101, 0);
        let (r, _) = gsv_simulate_with_diagnostics(&p, 100_000, 1e-10, &mut stream).unwrap();
        let e2: Vec<f64> = r.iter().map(|v| v * v).collect();
        let line = stats::ols_line(&e2[1..], &e2[..e2.len() - 1]).unwrap();
        // Heteroskedastic regression: conventional SEs understate the noise,
        // widen the band accordingly.
        assert!(
            (line.slope - p.alpha).abs() < 6.0 * line.se_slope,
            "slope {} vs alpha {}",
            line.slope,
            p.alpha
        );
    }

    #[test]
    fn returns_are_a_martingale_difference_around_the_mean() {
        let mut stream = RngStream::new(102, 0);
        let (r, _) = gsv_simulate_with_diagnostics(&preset(), 100_000, 1e-8, &mut stream).unwrap();
        let m = stats::mean(&r);
        let se = stats::sd(&r) / (r.len() as f64).sqrt();
        assert!(m.abs() < 3.0 * se, "mean {m}");
    }

    #[test]
    fn floor_hits_are_rare_at_the_default_preset() {
        let p = GsvParams {
            rho: 0.5,
            ..preset()
        };
        let mut stream = RngStream::new(103, 0);
        let (r, hits) = gsv_simulate_with_diagnostics(&p, 50_000, 1e-8, &mut stream).unwrap();
        assert_eq!(r.len(), 50_000);
        assert!(
            (hits as f64) < 0.01 * 50_000.0,
            "floor hit fraction {}",
            hits as f64 / 50_000.0
        );
    }

    #[test]
    fn vanishing_perturbation_reduces_to_arch_likelihood() {
        let mut stream = RngStream::new(104, 0);
        let (r, _) = gsv_simulate_with_diagnostics(&preset(), 300, 1e-8, &mut stream).unwrap();
        let z = GsvParams {
            varpi: 1e-6,
            ..preset()
        };
        let model = GsvModel::default();
        let ll = gsv_loglik_constrained(&z, &r, model.variance_floor, &model.quad).unwrap();
        // Direct ARCH(1) likelihood at the same (mu, omega, alpha).
        let mut direct = 0.0;
        for t in 0..r.len() - 1 {
            let v = z.omega + z.alpha * r[t] * r[t];
            direct +=
                -0.5 * (2.0 * PI * v).ln() - 0.5 * r[t + 1] * r[t + 1] / v;
        }
        direct /= (r.len() - 1) as f64;
        assert!((ll - direct).abs() < 1e-4, "{ll} vs {direct}");
    }

    #[test]
    fn quadrature_likelihood_matches_monte_carlo_integration() {
        let z = preset();
        let model = GsvModel::default();
        let mut stream = RngStream::new(105, 0);
        let (r, _) = gsv_simulate_with_diagnostics(&z, 11, 1e-8, &mut stream).unwrap();
        let norm = 1.0 / (2.0 * PI).sqrt();
        // Ten dates, each checked against a 10^6-draw Monte Carlo integral.
        for t in 0..10 {
            let eps = r[t] - z.mu;
            let k = z.omega + z.alpha * eps * eps;
            let e_next = r[t + 1] - z.mu;
            let quad_val = integrate(
                |eta| {
                    let var = k + eta;
                    let dens_r = norm / var.sqrt() * (-0.5 * e_next * e_next / var).exp();
                    let zs = eta / z.varpi;
                    dens_r * norm / z.varpi * (-0.5 * zs * zs).exp()
                },
                (1e-8 - k).max(-8.0 * z.varpi),
                8.0 * z.varpi,
                &model.quad,
            )
            .unwrap();

            let m = 1_000_000;
            let mut mc_stream = RngStream::new(106, t as u64);
            let mut vals = Vec::with_capacity(m);
            for _ in 0..m {
                let eta = z.varpi * mc_stream.standard_normal();
                let var = k + eta;
                vals.push(if var > 1e-8 {
                    norm / var.sqrt() * (-0.5 * e_next * e_next / var).exp()
                } else {
                    0.0
                });
            }
            let mc = stats::mean(&vals);
            let mc_se = stats::sd(&vals) / (m as f64).sqrt();
            assert!(
                (quad_val - mc).abs() < 3.0 * mc_se,
                "date {t}: quadrature {quad_val} vs MC {mc} (se {mc_se})"
            );
        }
    }

    #[test]
    fn truth_beats_perturbed_parameters_on_average() {
        let z = preset();
        let model = GsvModel::default();
        let perturbed = GsvParams {
            omega: 0.13,
            alpha: 0.12,
            ..z
        };
        let reps = 12u64;
        let mut diffs = Vec::new();
        for rep in 0..reps {
            let mut stream = RngStream::new(107 + rep, 0);
            let (r, _) = gsv_simulate_with_diagnostics(&z, 400, 1e-8, &mut stream).unwrap();
            let at_truth = gsv_loglik_constrained(&z, &r, 1e-8, &model.quad).unwrap();
            let at_pert = gsv_loglik_constrained(&perturbed, &r, 1e-8, &model.quad).unwrap();
            diffs.push(at_truth - at_pert);
        }
        let m = stats::mean(&diffs);
        assert!(m > 0.0, "mean log-likelihood gap {m}");
    }

    #[test]
    fn forced_filter_makes_the_varpi_component_collapse() {
        // With fitted variances equal to omega + alpha eps^2 exactly, the
        // varpi component is -1/varpi.
        let z = preset();
        let mut stream = RngStream::new(108, 0);
        let (r, _) = gsv_simulate_with_diagnostics(&z, 200, 1e-8, &mut stream).unwrap();
        let sig2: Vec<f64> = (0..r.len() - 1)
            .map(|t| z.omega + z.alpha * r[t] * r[t])
            .collect();
        let filt = FilteredVol { sig2 };
        let c = gsv_score_contributions_with_filter(&z, &r, &filt);
        let mean_w = c.column(3).sum() / c.nrows() as f64;
        assert_relative_eq!(mean_w, -1.0 / z.varpi, max_relative = 1e-12);
    }

    #[test]
    fn mean_component_recomputes_independently() {
        let z = preset();
        let mut stream = RngStream::new(109, 0);
        let (r, _) = gsv_simulate_with_diagnostics(&z, 300, 1e-8, &mut stream).unwrap();
        let filt = gsv_filter_plugin(&z, &r).unwrap();
        let c = gsv_score_contributions_with_filter(&z, &r, &filt);
        let mean_mu = c.column(0).sum() / c.nrows() as f64;
        let direct: f64 = (0..r.len() - 1)
            .map(|t| (r[t + 1] - z.mu) / filt.sig2[t])
            .sum::<f64>()
            / (r.len() - 1) as f64;
        assert_relative_eq!(mean_mu, direct, epsilon = 1e-12);
    }

    #[test]
    fn serial_dependence_component_is_positive_under_persistence() {
        let truth = GsvParams {
            rho: 0.5,
            ..preset()
        };
        let model = GsvModel::default();
        let reps = 30u64;
        let mut comps = Vec::new();
        for rep in 0..reps {
            let mut stream = RngStream::new(110 + rep, 0);
            let (r, _) = gsv_simulate_with_diagnostics(&truth, 2000, 1e-8, &mut stream).unwrap();
            // Constrained fit would be ideal; the plug-in evaluation at the
            // naive start is the same signal at far lower cost.
            let beta = model.fit_start(&Dataset::series(r.clone()));
            let z = GsvParams::from_slice(&beta);
            let filt = gsv_filter_plugin(&z, &r).unwrap();
            let c = gsv_score_contributions_with_filter(&z, &r, &filt);
            comps.push(c.column(4).sum() / c.nrows() as f64);
        }
        let m = stats::mean(&comps);
        let se = stats::sd(&comps) / (reps as f64).sqrt();
        assert!(m > 2.5 * se, "rho component mean {m} (se {se})");
    }

    #[test]
    fn plugin_tracks_true_variance_on_arch_data() {
        // On exact ARCH(1) data the fitted variances converge to the truth.
        let p = GsvParams {
            varpi: 1e-8,
            ..preset()
        };
        let mut mse = Vec::new();
        for &t in &[1000usize, 10_000] {
            let mut stream = RngStream::new(111, 0);
            let (r, _) = gsv_simulate_with_diagnostics(&p, t, 1e-10, &mut stream).unwrap();
            let filt = gsv_filter_plugin(&p, &r).unwrap();
            let err: f64 = (0..t - 1)
                .map(|i| {
                    let truth = p.omega + p.alpha * r[i] * r[i];
                    (filt.sig2[i] - truth).powi(2)
                })
                .sum::<f64>()
                / (t - 1) as f64;
            mse.push(err);
        }
        assert!(mse[1] < mse[0], "plug-in MSE did not shrink: {mse:?}");
        assert!(mse[1] < 1e-4);
    }

    #[test]
    fn functionals_are_positive_and_consistent() {
        let z = preset();
        let mut stream = RngStream::new(112, 0);
        let (r, _) = gsv_simulate_with_diagnostics(&z, 500, 1e-8, &mut stream).unwrap();
        let filt = gsv_filter_plugin(&z, &r).unwrap();
        for t in 0..filt.sig2.len() {
            assert!(filt.sig2[t] > 0.0);
            assert!(filt.inv_sig2(t) > 0.0);
            assert!(filt.inv_sig4(t) > 0.0);
            // The plug-in inverse is exact by construction.
            assert_relative_eq!(filt.sig2[t] * filt.inv_sig2(t), 1.0, epsilon = 1e-12);
        }
    }
}
