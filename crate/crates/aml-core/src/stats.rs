//! Statistical utilities: normal tail functions, sample summaries,
//! Kolmogorov-Smirnov tests, quantiles and a small OLS with a joint Wald
//! test used by the forecast backtests.

use crate::error::{AmlError, Result};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

pub fn normal_pdf(x: f64) -> f64 {
    Normal::standard().pdf(x)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Where the erfc-based CDF is still accurate; beyond it the Mills-ratio
/// series takes over (relative error ~ 15/x^6).
const TAIL_SWITCH: f64 = -30.0;

/// log Phi(x) with an asymptotic (Mills-ratio) expansion deep in the left
/// tail, where the direct CDF underflows.
pub fn normal_log_cdf(x: f64) -> f64 {
    if x > TAIL_SWITCH {
        normal_cdf(x).ln()
    } else {
        // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4) for x -> -inf
        let x2 = x * x;
        -0.5 * x2 - 0.5 * (2.0 * std::f64::consts::PI).ln() - (-x).ln()
            + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// phi(x)/Phi(x), the inverse Mills ratio, stable in the far left tail.
pub fn inverse_mills(x: f64) -> f64 {
    if x > TAIL_SWITCH {
        normal_pdf(x) / normal_cdf(x)
    } else {
        // phi/Phi ~ -x / (1 - 1/x^2 + 3/x^4)
        -x / (1.0 - 1.0 / (x * x) + 3.0 / (x * x * x * x))
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sd(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// The alpha-th sample quantile (order statistic at ceil(alpha n)).
pub fn quantile(xs: &[f64], alpha: f64) -> f64 {
    assert!(!xs.is_empty() && alpha > 0.0 && alpha < 1.0);
    let n = xs.len();
    let k = ((alpha * n as f64).ceil() as usize).clamp(1, n) - 1;
    let mut v = xs.to_vec();
    let (_, q, _) = v.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
    *q
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Kolmogorov-Smirnov statistic of `data` against a CDF.
pub fn ks_statistic<F>(data: &[f64], cdf: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value for a KS statistic at sample size `n`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let lambda = (n as f64).sqrt() * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
    }
    p.clamp(0.0, 1.0)
}

/// Result of a simple regression `y = a + b x + e` with a joint Wald test of
/// `(a, b) = (0, 1)`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OlsLine {
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: f64,
    pub se_slope: f64,
    pub r_squared: f64,
    pub wald_stat: f64,
    /// p-value of the chi-squared(2) Wald test of (intercept, slope) = (0, 1).
    pub wald_p: f64,
    pub n: usize,
}

/// OLS with conventional (homoskedastic) standard errors.
pub fn ols_line(y: &[f64], x: &[f64]) -> Result<OlsLine> {
    let n = y.len();
    if n < 3 || n != x.len() {
        return Err(AmlError::Config(format!(
            "regression needs >= 3 paired observations (got {n} and {})",
            x.len()
        )));
    }
    let nf = n as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx < 1e-300 {
        return Err(AmlError::DegenerateRegressor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let mut rss = 0.0;
    let mut tss = 0.0;
    for i in 0..n {
        let e = y[i] - intercept - slope * x[i];
        rss += e * e;
        tss += (y[i] - my) * (y[i] - my);
    }
    let sigma2 = rss / (nf - 2.0);
    let sum_x2: f64 = x.iter().map(|v| v * v).sum();
    let se_slope = (sigma2 / sxx).sqrt();
    let se_intercept = (sigma2 * sum_x2 / (nf * sxx)).sqrt();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    // Wald test of (a, b) = (0, 1): W = d' V^{-1} d ~ chi2(2),
    // with V = sigma2 * (X'X)^{-1}.
    let d = [intercept, slope - 1.0];
    let (wald_stat, wald_p) = if sigma2 < 1e-300 {
        let exact = d[0].abs() < 1e-12 && d[1].abs() < 1e-12;
        if exact {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        // (X'X) = [[n, sum x], [sum x, sum x^2]]
        let sx: f64 = x.iter().sum();
        let xtx = [[nf, sx], [sx, sum_x2]];
        let w = (d[0] * (xtx[0][0] * d[0] + xtx[0][1] * d[1])
            + d[1] * (xtx[1][0] * d[0] + xtx[1][1] * d[1]))
            / sigma2;
        // chi-squared(2) survival function has the closed form exp(-w/2).
        (w, (-0.5 * w).exp())
    };

    Ok(OlsLine {
        intercept,
        slope,
        se_intercept,
        se_slope,
        r_squared,
        wald_stat,
        wald_p,
        n,
    })
}

/// Standard error of a binomial proportion.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
