//! The score-matching solver.
//!
//! Pipeline: constrained fit -> (optional) integer-component grid scan ->
//! damped Gauss-Newton on the weighted residual system -> derivative-free
//! refinement and perturbed restarts when the match is poor -> rounding of
//! integer components.

use crate::engine::criterion::ScoreMatch;
use crate::engine::fit::constrained_fit;
use crate::engine::model::{Dataset, Model};
use crate::engine::params::ParamVector;
use crate::engine::simbank::SimBank;
use crate::engine::variance::asymptotic_variance;
use crate::error::Result;
use crate::numerics::optim::{
    levenberg_marquardt, nelder_mead, OptimConfig, OptimOutcome, OptimStatus,
};
use crate::numerics::rng::{self, RngStream};
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Configuration of the matching solver (simulated objective).
    pub optim: OptimConfig,
    /// Configuration of the constrained-fit quasi-Newton stage.
    pub fit: OptimConfig,
    /// Perturbed restarts attempted when the first solve matches poorly.
    pub max_restarts: usize,
    /// Restart trigger: criterion above `restart_scale * matched_scale()`.
    pub restart_scale: f64,
    /// Walk integer components across the adjacent grid before the joint
    /// solve, re-solving the continuous block at each step.
    pub integer_scan: bool,
    /// Gauss-Newton iterations spent per integer grid step.
    pub integer_scan_budget: usize,
    /// Compute the sandwich covariance and standard errors after solving.
    pub with_covariance: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            optim: OptimConfig::for_simulated(),
            fit: OptimConfig::for_likelihood(),
            max_restarts: 4,
            restart_scale: 25.0,
            integer_scan: true,
            integer_scan_budget: 4,
            with_covariance: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimationResult {
    pub theta_hat: ParamVector,
    pub beta_hat: ParamVector,
    /// Weighted score-match criterion at the reported estimate.
    pub criterion: f64,
    /// Sandwich covariance of sqrt(T)(theta_hat - theta0), when requested.
    pub omega: Option<DMatrix<f64>>,
    /// sqrt(diag(omega)/T), when `omega` is present.
    pub std_errors: Option<Vec<f64>>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl EstimationResult {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.theta_hat.get(name)
    }
}

/// Two-stage estimation: constrained fit, then score matching.
pub fn solve_aml<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    bank: &SimBank,
    opts: &SolveOptions,
) -> Result<EstimationResult> {
    let beta_hat = constrained_fit(model, data, &opts.fit)?;
    solve_aml_at(model, data, beta_hat, bank, opts)
}

/// Score matching from a given constrained estimate (or a hypothesized
/// constrained value, for the unfeasible variant of the estimator).
pub fn solve_aml_at<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    beta_hat: ParamVector,
    bank: &SimBank,
    opts: &SolveOptions,
) -> Result<EstimationResult> {
    let matcher = ScoreMatch::new(model, data, &beta_hat, bank)?;
    let template = model.param_template();
    let bounds = model.bounds();
    let integer_dims = template.integer_indices();
    let opts = {
        let mut o = opts.clone();
        o.optim.fd_step = model.criterion_fd_step();
        o
    };

    // Start from the constrained estimate itself.
    let mut theta0 = beta_hat.values().to_vec();
    for (v, &(lo, hi)) in theta0.iter_mut().zip(&bounds) {
        *v = v.clamp(lo, hi);
    }

    let mut evaluations = 0usize;
    if opts.integer_scan {
        for &j in &integer_dims {
            let (start, e) = continuation_scan(&matcher, &theta0, j, &bounds, &opts)?;
            theta0 = start;
            evaluations += e;
        }
    }

    let residuals = |th: &[f64]| matcher.residuals(th);
    let mut best: OptimOutcome = levenberg_marquardt(&residuals, &theta0, &bounds, &opts.optim)?;
    let mut iterations = best.iterations;
    evaluations += best.evaluations;

    let threshold = opts.restart_scale * matcher.matched_scale();
    if best.f > threshold && opts.max_restarts > 0 {
        // Derivative-free refinement from the stalled point, then perturbed
        // restarts; the best criterion wins.
        let nm = nelder_mead(
            |th| matcher.criterion(th).unwrap_or(f64::INFINITY),
            &best.x,
            &bounds,
            &opts.optim,
        )?;
        iterations += nm.iterations;
        evaluations += nm.evaluations;
        if nm.f < best.f {
            best = nm;
        }

        let mut perturb = RngStream::for_cell(bank.seed(), bank.replication(), rng::SOLVER_PATH);
        for _ in 0..opts.max_restarts {
            if best.f <= threshold {
                break;
            }
            let mut start = best.x.clone();
            for (j, v) in start.iter_mut().enumerate() {
                if integer_dims.contains(&j) {
                    continue;
                }
                let scale = 0.15 * v.abs().max(0.1);
                *v = (*v + scale * (2.0 * perturb.uniform() - 1.0))
                    .clamp(bounds[j].0, bounds[j].1);
            }
            let trial = levenberg_marquardt(&residuals, &start, &bounds, &opts.optim)?;
            iterations += trial.iterations;
            evaluations += trial.evaluations;
            if trial.f < best.f {
                best = trial;
            }
        }
    }

    // Integer components: round the piecewise-linear optimum to the grid.
    let mut theta = best.x.clone();
    for &j in &integer_dims {
        let (lo, hi) = bounds[j];
        theta[j] = theta[j].round().clamp(lo.ceil(), hi.floor());
    }
    let criterion = matcher.criterion(&theta)?;
    evaluations += 1;

    let theta_hat = template.with_values(theta)?;
    let converged = best.status == OptimStatus::Converged;

    let (omega, std_errors) = if opts.with_covariance {
        let omega = asymptotic_variance(model, data, &theta_hat, &beta_hat, bank, &opts.optim)?;
        let t = data.len() as f64;
        let se: Vec<f64> = omega.diagonal().iter().map(|v| (v / t).sqrt()).collect();
        (Some(omega), Some(se))
    } else {
        (None, None)
    };

    Ok(EstimationResult {
        theta_hat,
        beta_hat,
        criterion,
        omega,
        std_errors,
        iterations,
        evaluations,
        converged,
    })
}

/// Continuation walk along one integer component.
///
/// The constrained point is always a *self-matching* near-solution
/// (simulating at the fitted constrained model reproduces the observed
/// score up to noise in the free directions), so a grid scan that holds the
/// continuous block fixed never leaves it. Instead, each integer step
/// re-solves the continuous components with a small Gauss-Newton budget,
/// warm-started from the previous step through the model's step hint. The
/// walk runs on a reduced common-random-number path subset; the best two
/// candidates get a deeper polish and the winner is chosen on the full
/// bank. Returns the chosen starting vector and the evaluation count.
fn continuation_scan<M: Model + ?Sized>(
    matcher: &ScoreMatch<'_, M>,
    theta: &[f64],
    dim: usize,
    bounds: &[(f64, f64)],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, usize)> {
    let (lo, hi) = bounds[dim];
    let lo_i = lo.ceil();
    let hi_i = hi.floor();
    let start_k = theta[dim].round().clamp(lo_i, hi_i);

    let mini = matcher.with_paths((matcher.paths() / 4).max(8));
    let free_dims: Vec<usize> = (0..theta.len()).filter(|&j| j != dim).collect();
    let free_bounds: Vec<(f64, f64)> = free_dims.iter().map(|&j| bounds[j]).collect();
    let mini_cfg = OptimConfig {
        max_iters: opts.integer_scan_budget,
        ..opts.optim.clone()
    };
    let polish_cfg = OptimConfig {
        max_iters: 3 * opts.integer_scan_budget,
        ..opts.optim.clone()
    };

    let mut evals = 0usize;
    let refine = |hinted: Vec<f64>,
                  k: f64,
                  cfg: &OptimConfig,
                  evals: &mut usize|
     -> Result<(Vec<f64>, f64)> {
        let residual = |free: &[f64]| {
            let mut th = hinted.clone();
            th[dim] = k;
            for (slot, &j) in free_dims.iter().enumerate() {
                th[j] = free[slot];
            }
            mini.residuals(&th)
        };
        let x0: Vec<f64> = free_dims
            .iter()
            .map(|&j| hinted[j].clamp(bounds[j].0, bounds[j].1))
            .collect();
        let out = levenberg_marquardt(residual, &x0, &free_bounds, cfg)?;
        *evals += out.evaluations;
        let mut th = hinted;
        th[dim] = k;
        for (slot, &j) in free_dims.iter().enumerate() {
            th[j] = out.x[slot];
        }
        Ok((th, out.f))
    };

    // Walk both directions, keeping every visited candidate.
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    let (th0, f0) = refine(theta.to_vec(), start_k, &mini_cfg, &mut evals)?;
    candidates.push((th0.clone(), f0));
    for dir in [1.0, -1.0] {
        let mut k = start_k + dir;
        let mut misses = 0usize;
        let mut warm = th0.clone();
        let mut best_dir = f0;
        while k >= lo_i && k <= hi_i && misses < 3 {
            let hinted = matcher.model().integer_step_hint(&warm, dim, k);
            let (th, f) = refine(hinted, k, &mini_cfg, &mut evals)?;
            warm = th.clone();
            if f < best_dir {
                best_dir = f;
                misses = 0;
            } else {
                misses += 1;
            }
            candidates.push((th, f));
            k += dir;
        }
    }

    // Deep-polish the most promising candidates, then pick on the full bank.
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (th, _) in candidates.iter().take(2) {
        let (polished, _) = refine(th.clone(), th[dim], &polish_cfg, &mut evals)?;
        let f_full = matcher.criterion(&polished)?;
        evals += 1;
        if best.as_ref().map_or(true, |(_, bf)| f_full < *bf) {
            best = Some((polished, f_full));
        }
    }
    Ok((best.expect("at least one candidate").0, evals))
}
