//! Finite-difference derivatives.

use crate::error::{AmlError, Result};

/// Central-difference gradient with per-component step `h_i = step * max(1, |x_i|)`.
///
/// Errors if `f` is non-finite at any of the `2p` evaluation points, carrying
/// the offending point.
pub fn central_diff_gradient<F>(f: F, x: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x.len()];
    let mut xi = x.to_vec();
    for i in 0..x.len() {
        let h = step * x[i].abs().max(1.0);
        xi[i] = x[i] + h;
        let fp = f(&xi);
        if !fp.is_finite() {
            return Err(AmlError::NonFiniteObjective {
                point: xi.clone(),
                value: fp,
            });
        }
        xi[i] = x[i] - h;
        let fm = f(&xi);
        if !fm.is_finite() {
            return Err(AmlError::NonFiniteObjective {
                point: xi.clone(),
                value: fm,
            });
        }
        xi[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Central-difference derivative of a scalar function of one variable, with
/// one-sided fallback when a box `[lo, hi]` would be violated.
pub fn bounded_partial<F>(f: F, x: f64, step: f64, lo: f64, hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let h = step * x.abs().max(1.0);
    let (up, dn) = (x + h <= hi, x - h >= lo);
    match (up, dn) {
        (true, true) => (f(x + h) - f(x - h)) / (2.0 * h),
        (true, false) => (f(x + h) - f(x)) / h,
        (false, true) => (f(x) - f(x - h)) / h,
        (false, false) => 0.0,
    }
}

/// Numerical Hessian by central second differences with one step of
/// Richardson refinement on the diagonal.
pub fn hessian<F>(f: F, x: &[f64], step: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    let p = x.len();
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(AmlError::NonFiniteObjective {
            point: x.to_vec(),
            value: f0,
        });
    }
    let h: Vec<f64> = x.iter().map(|xi| step * xi.abs().max(1.0)).collect();
    let mut hess = vec![vec![0.0; p]; p];
    let mut xt = x.to_vec();

    let diag_at = |xt: &mut Vec<f64>, i: usize, hi: f64| -> f64 {
        xt[i] = x[i] + hi;
        let fp = f(xt);
        xt[i] = x[i] - hi;
        let fm = f(xt);
        xt[i] = x[i];
        (fp - 2.0 * f0 + fm) / (hi * hi)
    };

    for i in 0..p {
        // Richardson: D(h) and D(h/2) combine to cancel the O(h^2) error.
        let d1 = diag_at(&mut xt, i, h[i]);
        let d2 = diag_at(&mut xt, i, h[i] / 2.0);
        hess[i][i] = (4.0 * d2 - d1) / 3.0;
    }
    for i in 0..p {
        for j in (i + 1)..p {
            xt[i] = x[i] + h[i];
            xt[j] = x[j] + h[j];
            let fpp = f(&xt);
            xt[j] = x[j] - h[j];
            let fpm = f(&xt);
            xt[i] = x[i] - h[i];
            let fmm = f(&xt);
            xt[j] = x[j] + h[j];
            let fmp = f(&xt);
            xt[i] = x[i];
            xt[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}
