//! Box-constrained minimizers.
//!
//! Three solvers cover the toolkit's needs:
//! - [`nelder_mead`]: derivative-free simplex search, used on simulated
//!   objectives where gradients are unreliable;
//! - [`bfgs`]: quasi-Newton with central finite-difference gradients, used on
//!   smooth constrained log-likelihoods;
//! - [`levenberg_marquardt`]: damped Gauss-Newton for square residual
//!   systems, used to drive the score-matching equations to zero.
//!
//! All solvers are deterministic given their inputs and keep iterates inside
//! the supplied box by projection.

use crate::error::{AmlError, Result};

/// Tolerances and budgets shared by the solvers.
#[derive(Clone, Debug)]
pub struct OptimConfig {
    pub max_iters: usize,
    /// Absolute tolerance on the parameter step.
    pub x_tol: f64,
    /// Absolute tolerance on objective improvement.
    pub f_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl OptimConfig {
    pub fn new(max_iters: usize, x_tol: f64, f_tol: f64, fd_step: f64) -> Result<Self> {
        if x_tol <= 0.0 || f_tol <= 0.0 || fd_step <= 0.0 {
            return Err(AmlError::Config(
                "optimizer tolerances must be strictly positive".into(),
            ));
        }
        Ok(Self {
            max_iters,
            x_tol,
            f_tol,
            fd_step,
        })
    }

    /// Defaults for smooth analytic objectives (log-likelihoods).
    pub fn for_likelihood() -> Self {
        Self {
            max_iters: 300,
            x_tol: 1e-9,
            f_tol: 1e-11,
            fd_step: 1e-5,
        }
    }

    /// Defaults for simulated objectives under common random numbers.
    pub fn for_simulated() -> Self {
        Self {
            max_iters: 200,
            x_tol: 1e-7,
            f_tol: 1e-12,
            fd_step: 1e-4,
        }
    }
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self::for_likelihood()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OptimStatus {
    Converged,
    MaxIters,
}

#[derive(Clone, Debug)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: OptimStatus,
}

fn clip(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

fn check_start<F>(f: &F, x0: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(AmlError::NonFiniteObjective {
            point: x0.to_vec(),
            value: f0,
        });
    }
    Ok(f0)
}

/// Derivative-free simplex minimization (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2), iterates projected into the box.
pub fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptimConfig,
) -> Result<OptimOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let f0 = check_start(&f, x0)?;
    let mut evals = 1usize;
    let mut eval = |x: &[f64]| -> f64 {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    // Initial simplex: perturb each coordinate by 5% of scale.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut fvals: Vec<f64> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    fvals.push(f0);
    for i in 0..n {
        let mut v = x0.to_vec();
        let step = 0.05 * v[i].abs().max(0.1);
        let (lo, hi) = bounds[i];
        v[i] = if v[i] + step <= hi { v[i] + step } else { v[i] - step };
        v[i] = v[i].clamp(lo, hi);
        let fv = eval(&v);
        simplex.push(v);
        fvals.push(fv);
    }

    let mut iterations = 0;
    let mut status = OptimStatus::MaxIters;
    while iterations < cfg.max_iters {
        iterations += 1;
        // Order the simplex.
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap());
        let best = idx[0];
        let worst = idx[n];
        let second_worst = idx[n - 1];

        let f_spread = fvals[worst] - fvals[best];
        let x_spread = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if f_spread.abs() < cfg.f_tol && x_spread < cfg.x_tol {
            status = OptimStatus::Converged;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (k, v) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for j in 0..n {
                centroid[j] += v[j] / n as f64;
            }
        }

        let mk_point = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clip(&mut p, bounds);
            p
        };

        let xr = mk_point(1.0);
        let fr = eval(&xr);
        if fr < fvals[best] {
            let xe = mk_point(2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[worst] = xe;
                fvals[worst] = fe;
            } else {
                simplex[worst] = xr;
                fvals[worst] = fr;
            }
        } else if fr < fvals[second_worst] {
            simplex[worst] = xr;
            fvals[worst] = fr;
        } else {
            let (xc, fc) = if fr < fvals[worst] {
                let p = mk_point(0.5);
                let fp = eval(&p);
                (p, fp)
            } else {
                let p = mk_point(-0.5);
                let fp = eval(&p);
                (p, fp)
            };
            if fc < fvals[worst].min(fr) {
                simplex[worst] = xc;
                fvals[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                for k in 0..=n {
                    if k == best {
                        continue;
                    }
                    for j in 0..n {
                        simplex[k][j] = simplex[best][j] + 0.5 * (simplex[k][j] - simplex[best][j]);
                    }
                    fvals[k] = eval(&simplex[k]);
                }
            }
        }
    }

    let (mut bi, mut bf) = (0usize, fvals[0]);
    for (k, &v) in fvals.iter().enumerate() {
        if v < bf {
            bf = v;
            bi = k;
        }
    }
    Ok(OptimOutcome {
        x: simplex.swap_remove(bi),
        f: bf,
        iterations,
        evaluations: evals,
        status,
    })
}

fn fd_gradient_bounded<F>(
    f: &F,
    x: &[f64],
    fx: f64,
    bounds: &[(f64, f64)],
    fd_step: f64,
    evals: &mut usize,
) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut xt = x.to_vec();
    for i in 0..n {
        let h = fd_step * x[i].abs().max(1.0);
        let (lo, hi) = bounds[i];
        let up_ok = x[i] + h <= hi;
        let dn_ok = x[i] - h >= lo;
        let d = match (up_ok, dn_ok) {
            (true, true) => {
                xt[i] = x[i] + h;
                let fp = f(&xt);
                xt[i] = x[i] - h;
                let fm = f(&xt);
                *evals += 2;
                (fp - fm) / (2.0 * h)
            }
            (true, false) => {
                xt[i] = x[i] + h;
                let fp = f(&xt);
                *evals += 1;
                (fp - fx) / h
            }
            (false, true) => {
                xt[i] = x[i] - h;
                let fm = f(&xt);
                *evals += 1;
                (fx - fm) / h
            }
            (false, false) => 0.0,
        };
        xt[i] = x[i];
        g[i] = if d.is_finite() { d } else { 0.0 };
    }
    g
}

/// BFGS with central finite-difference gradients and Armijo backtracking.
/// Trial points are projected into the box; gradient steps fall back to
/// one-sided differences at active bounds.
pub fn bfgs<F>(f: F, x0: &[f64], bounds: &[(f64, f64)], cfg: &OptimConfig) -> Result<OptimOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 1usize;

    let mut x = x0.to_vec();
    clip(&mut x, bounds);
    let mut fx = check_start(&f, &x)?;

    // Inverse-Hessian approximation.
    let mut h_inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        h_inv[i][i] = 1.0;
    }
    let mut g = fd_gradient_bounded(&f, &x, fx, bounds, cfg.fd_step, &mut evals);

    let mut iterations = 0;
    let mut status = OptimStatus::MaxIters;
    while iterations < cfg.max_iters {
        iterations += 1;

        // Direction d = -H g.
        let mut d = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                d[i] -= h_inv[i][j] * g[j];
            }
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // Reset to steepest descent.
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] = if i == j { 1.0 } else { 0.0 };
                }
                d[i] = -g[i];
            }
        }

        // Backtracking line search with projection.
        let mut step = 1.0;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            clip(&mut x_new, bounds);
            let v = f(&x_new);
            evals += 1;
            f_new = if v.is_finite() { v } else { f64::INFINITY };
            let proj_slope: f64 = x_new
                .iter()
                .zip(&x)
                .zip(&g)
                .map(|((xn, xo), gi)| (xn - xo) * gi)
                .sum();
            if f_new <= fx + 1e-4 * proj_slope.min(0.0) && f_new < fx {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            status = OptimStatus::Converged;
            break;
        }

        let g_new = fd_gradient_bounded(&f, &x_new, f_new, bounds, cfg.fd_step, &mut evals);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // BFGS update of the inverse Hessian.
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    hy[i] += h_inv[i][j] * y[j];
                }
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }

        let step_size = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let f_impr = fx - f_new;
        x = x_new.clone();
        fx = f_new;
        g = g_new;
        if step_size < cfg.x_tol || f_impr < cfg.f_tol {
            status = OptimStatus::Converged;
            break;
        }
    }

    Ok(OptimOutcome {
        x,
        f: fx,
        iterations,
        evaluations: evals,
        status,
    })
}

/// Damped Gauss-Newton (Levenberg-Marquardt) for a residual system
/// `r: R^p -> R^m`, minimizing `|r(x)|^2` inside a box. The Jacobian is
/// estimated by central finite differences (one-sided at active bounds).
pub fn levenberg_marquardt<R>(
    residuals: R,
    x0: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptimConfig,
) -> Result<OptimOutcome>
where
    R: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut evals = 0usize;

    let mut x = x0.to_vec();
    clip(&mut x, bounds);
    let mut r = residuals(&x)?;
    evals += 1;
    let m = r.len();
    let mut fx: f64 = r.iter().map(|v| v * v).sum();
    if !fx.is_finite() {
        return Err(AmlError::NonFiniteObjective {
            point: x,
            value: fx,
        });
    }

    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut status = OptimStatus::MaxIters;

    'outer: while iterations < cfg.max_iters {
        iterations += 1;

        // Jacobian by finite differences.
        let mut jac = vec![vec![0.0; n]; m];
        let mut xt = x.clone();
        for j in 0..n {
            let h = cfg.fd_step * x[j].abs().max(1.0);
            let (lo, hi) = bounds[j];
            let up_ok = x[j] + h <= hi;
            let dn_ok = x[j] - h >= lo;
            let (rp, rm, dh) = match (up_ok, dn_ok) {
                (true, true) => {
                    xt[j] = x[j] + h;
                    let rp = residuals(&xt)?;
                    xt[j] = x[j] - h;
                    let rm = residuals(&xt)?;
                    evals += 2;
                    (rp, rm, 2.0 * h)
                }
                (true, false) => {
                    xt[j] = x[j] + h;
                    let rp = residuals(&xt)?;
                    evals += 1;
                    (rp, r.clone(), h)
                }
                _ => {
                    xt[j] = x[j] - h;
                    let rm = residuals(&xt)?;
                    evals += 1;
                    (r.clone(), rm, h)
                }
            };
            xt[j] = x[j];
            for i in 0..m {
                jac[i][j] = (rp[i] - rm[i]) / dh;
            }
        }

        // Normal equations pieces.
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                jtr[a] += jac[i][a] * r[i];
                for b in a..n {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        let grad_norm = jtr.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if grad_norm < cfg.f_tol.sqrt() * 1e-3 {
            status = OptimStatus::Converged;
            break;
        }

        // Try damped steps, inflating lambda on rejection.
        for _attempt in 0..25 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let delta = match solve_dense(&a, &jtr) {
                Some(d) => d,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut x_new: Vec<f64> = x.iter().zip(&delta).map(|(xi, di)| xi - di).collect();
            clip(&mut x_new, bounds);
            let r_new = residuals(&x_new)?;
            evals += 1;
            let f_new: f64 = r_new.iter().map(|v| v * v).sum();
            if f_new.is_finite() && f_new < fx {
                let step_size = x_new
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let impr = fx - f_new;
                x = x_new;
                r = r_new;
                fx = f_new;
                lambda = (lambda / 3.0).max(1e-12);
                if step_size < cfg.x_tol || impr < cfg.f_tol * fx.max(1.0) {
                    status = OptimStatus::Converged;
                    break 'outer;
                }
                continue 'outer;
            }
            lambda *= 4.0;
        }
        // No acceptable step found.
        status = OptimStatus::Converged;
        break;
    }

    Ok(OptimOutcome {
        x,
        f: fx,
        iterations,
        evaluations: evals,
        status,
    })
}

/// Gaussian elimination with partial pivoting; `None` on (near-)singularity.
fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for row in (col + 1)..n {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}
