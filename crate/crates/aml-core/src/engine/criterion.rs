//! The score-matching criterion: weighted distance between the observed
//! pseudo-score at the constrained estimate and its average over simulated
//! paths.

use crate::engine::model::{Dataset, Model};
use crate::engine::params::ParamVector;
use crate::engine::simbank::SimBank;
use crate::error::{AmlError, Result};
use rayon::prelude::*;

/// Floor applied to per-component score dispersions when forming weights,
/// relative to the largest dispersion.
const WEIGHT_FLOOR_REL: f64 = 1e-10;

/// A prepared score-matching problem for one dataset and one constrained
/// estimate. Evaluations are exactly repeatable functions of `theta` because
/// the simulation streams are recreated from the bank on every call.
pub struct ScoreMatch<'a, M: Model + ?Sized> {
    model: &'a M,
    data_len: usize,
    beta: Vec<f64>,
    g_obs: Vec<f64>,
    /// Per-component inverse-dispersion scaling of the match.
    weights: Vec<f64>,
    bank: SimBank,
    integer_dims: Vec<usize>,
}

impl<'a, M: Model + ?Sized> ScoreMatch<'a, M> {
    /// Prepare the match at `beta_hat`: computes the observed pseudo-score
    /// and sets component weights to the inverse sample standard deviation
    /// of the per-observation score contributions.
    pub fn new(
        model: &'a M,
        data: &Dataset,
        beta_hat: &ParamVector,
        bank: &'a SimBank,
    ) -> Result<Self> {
        let beta = beta_hat.values().to_vec();
        let g_obs = model.pseudo_score(&beta, data)?;
        let contrib = model.score_contributions(&beta, data)?;
        let p = g_obs.len();
        let t = contrib.nrows() as f64;

        let mut sds = vec![0.0; p];
        for j in 0..p {
            let col = contrib.column(j);
            let mean = col.sum() / t;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
            sds[j] = var.sqrt();
        }
        let max_sd = sds.iter().copied().fold(0.0, f64::max);
        let floor = (max_sd * WEIGHT_FLOOR_REL).max(f64::MIN_POSITIVE);
        let weights = sds.iter().map(|s| 1.0 / s.max(floor)).collect();

        Ok(Self {
            model,
            data_len: data.len(),
            beta,
            g_obs,
            weights,
            bank: bank.clone(),
            integer_dims: beta_hat.integer_indices(),
        })
    }

    /// A view of the same match evaluated on only the first `paths`
    /// simulation streams (a common-random-number subset): cheaper and
    /// noisier, for coarse search phases.
    pub fn with_paths(&self, paths: usize) -> ScoreMatch<'a, M> {
        let paths = paths.clamp(1, self.bank.paths());
        ScoreMatch {
            model: self.model,
            data_len: self.data_len,
            beta: self.beta.clone(),
            g_obs: self.g_obs.clone(),
            weights: self.weights.clone(),
            bank: SimBank::new(
                self.bank.seed(),
                self.bank.replication(),
                paths,
                self.bank.len(),
            ),
            integer_dims: self.integer_dims.clone(),
        }
    }

    pub fn model(&self) -> &M {
        self.model
    }

    pub fn observed_score(&self) -> &[f64] {
        &self.g_obs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn paths(&self) -> usize {
        self.bank.paths()
    }

    /// Average simulated pseudo-score at a structural value whose integer
    /// components hold exactly integer values.
    fn sim_avg_score_at_integer(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let h = self.bank.paths();
        let per_path: Vec<Vec<f64>> = (0..h)
            .into_par_iter()
            .map(|idx| -> Result<Vec<f64>> {
                let mut stream = self.bank.path_stream(idx);
                self.model
                    .simulated_pseudo_score(&self.beta, theta, self.data_len, &mut stream)
                    .map_err(|e| match e {
                        e @ AmlError::Simulation { .. } => e,
                        other => AmlError::Simulation {
                            theta: theta.to_vec(),
                            reason: other.to_string(),
                        },
                    })
            })
            .collect::<Result<Vec<_>>>()?;

        // Fixed-order reduction keeps the result independent of thread layout.
        let p = self.g_obs.len();
        let mut avg = vec![0.0; p];
        for g in &per_path {
            for j in 0..p {
                avg[j] += g[j];
            }
        }
        for v in avg.iter_mut() {
            *v /= h as f64;
        }
        Ok(avg)
    }

    /// Average simulated pseudo-score with the piecewise-linear extension in
    /// the integer directions: at a fractional integer component the score is
    /// the linear blend of the scores simulated at the two adjacent integers,
    /// sharing the same random numbers.
    pub fn sim_avg_score(&self, theta: &[f64]) -> Result<Vec<f64>> {
        // Collect fractional integer dims.
        let mut frac_dims: Vec<(usize, f64)> = Vec::new();
        for &j in &self.integer_dims {
            let lam = theta[j] - theta[j].floor();
            if lam > 1e-12 && lam < 1.0 - 1e-12 {
                frac_dims.push((j, lam));
            }
        }
        if frac_dims.is_empty() {
            let mut th = theta.to_vec();
            for &j in &self.integer_dims {
                th[j] = th[j].round();
            }
            return self.sim_avg_score_at_integer(&th);
        }

        let p = self.g_obs.len();
        let mut acc = vec![0.0; p];
        let corners = 1usize << frac_dims.len();
        for corner in 0..corners {
            let mut th = theta.to_vec();
            let mut w = 1.0;
            for (bit, &(j, lam)) in frac_dims.iter().enumerate() {
                if corner >> bit & 1 == 1 {
                    th[j] = theta[j].floor() + 1.0;
                    w *= lam;
                } else {
                    th[j] = theta[j].floor();
                    w *= 1.0 - lam;
                }
            }
            let g = self.sim_avg_score_at_integer(&th)?;
            for j in 0..p {
                acc[j] += w * g[j];
            }
        }
        Ok(acc)
    }

    /// Weighted residual vector `w ⊙ (g_obs − ḡ_sim(theta))`.
    pub fn residuals(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let sim = self.sim_avg_score(theta)?;
        Ok(self
            .g_obs
            .iter()
            .zip(&sim)
            .zip(&self.weights)
            .map(|((o, s), w)| w * (o - s))
            .collect())
    }

    /// Squared Euclidean norm of the weighted residuals. Always >= 0.
    pub fn criterion(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.residuals(theta)?.iter().map(|r| r * r).sum())
    }

    /// The natural scale of the criterion at a well-matched point:
    /// each weighted component has sampling variance ~ (1 + 1/H)/T.
    pub fn matched_scale(&self) -> f64 {
        let p = self.g_obs.len() as f64;
        let h = self.bank.paths() as f64;
        p * (1.0 + 1.0 / h) / self.data_len as f64
    }
}
