//! Monte Carlo accuracy tables: bias, mean squared error, coverage, and
//! standard-error ratios over replicated estimation runs.
//!
//! Coverage conventions, both emitted when available:
//! - `cov`: the interval half-width is 1.96 times the *Monte Carlo* standard
//!   deviation of the estimator across replications;
//! - `cov_wald`: per-replication 95% Wald intervals from the sandwich
//!   standard errors.

use super::config::{EstimatorId, ExperimentConfig, ModelId};
use crate::engine::{constrained_fit, solve_aml, Dataset, Model, SimBank, SolveOptions};
use crate::error::{AmlError, Result};
use crate::ml::msm_ml_fit;
use crate::models::garch_sv::GsvModel;
use crate::models::gaussian::GaussianLocation;
use crate::models::msm::MsmModel;
use crate::models::probit::ProbitModel;
use crate::models::stable::StableModel;
use crate::models::tobit::TobitModel;
use crate::numerics::optim::OptimConfig;
use crate::numerics::rng::RngStream;
use crate::stats;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct AccuracyRow {
    pub estimator: String,
    pub parameter: String,
    pub mean: f64,
    pub bias: f64,
    pub mse: f64,
    /// Coverage under the Monte-Carlo-dispersion interval rule.
    pub cov: f64,
    /// Coverage under per-replication Wald intervals, when standard errors
    /// were computed.
    pub cov_wald: Option<f64>,
    /// Mean ratio SE(ml) / SE(aml), on rows of the aml estimator when both
    /// were run with standard errors.
    pub se_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RawRecord {
    pub replication: u64,
    pub estimator: String,
    pub parameter: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub config: ExperimentConfig,
    pub parameter_names: Vec<String>,
    pub rows: Vec<AccuracyRow>,
    pub raw: Vec<RawRecord>,
    /// Replications dropped because some estimator failed.
    pub dropped: usize,
}

/// One replication's output for one estimator.
#[derive(Clone, Debug)]
struct EstimateSet {
    values: Vec<f64>,
    ses: Option<Vec<f64>>,
}

fn build_model(cfg: &ExperimentConfig, stream: &mut RngStream) -> Box<dyn Model> {
    match cfg.model {
        ModelId::Tobit => Box::new(TobitModel::uniform_design(cfg.sample_size, stream)),
        ModelId::Probit => Box::new(ProbitModel::gaussian_design(cfg.sample_size, stream)),
        ModelId::Msm => Box::new(MsmModel::default()),
        ModelId::Stable => Box::new(StableModel),
        ModelId::GarchSv => Box::new(GsvModel::default()),
        ModelId::GaussianLocation => Box::new(GaussianLocation),
    }
}

fn run_replication(
    cfg: &ExperimentConfig,
    rep: u64,
) -> Result<Vec<(EstimatorId, EstimateSet)>> {
    let bank = SimBank::new(cfg.seed, rep, cfg.sim_paths, cfg.sample_size);
    let mut data_stream = bank.data_stream();
    // Exogenous designs are redrawn per replication, then conditioned on.
    let model = build_model(cfg, &mut data_stream);
    let data: Dataset = model.simulate(&cfg.truth, cfg.sample_size, &mut data_stream)?;

    let mut out = Vec::new();
    for &estimator in &cfg.estimators {
        let set = match estimator {
            EstimatorId::Auxiliary => {
                let beta = constrained_fit(model.as_ref(), &data, &OptimConfig::for_likelihood())?;
                EstimateSet {
                    values: beta.values().to_vec(),
                    ses: None,
                }
            }
            EstimatorId::Aml => {
                let opts = SolveOptions {
                    with_covariance: cfg.with_asymptotic_se,
                    ..SolveOptions::default()
                };
                let res = solve_aml(model.as_ref(), &data, &bank, &opts)?;
                EstimateSet {
                    values: res.theta_hat.values().to_vec(),
                    ses: res.std_errors,
                }
            }
            EstimatorId::Ml => {
                let returns = data.values()?;
                let grid = if cfg.ml_grid.is_empty() {
                    (1..=7).collect::<Vec<_>>()
                } else {
                    cfg.ml_grid.clone()
                };
                let ml = msm_ml_fit(returns, &grid, &OptimConfig::for_likelihood())?;
                let best = ml.best();
                let values = vec![
                    best.zeta[0],
                    best.zeta[1],
                    best.zeta[2],
                    best.zeta[3],
                    best.k_bar as f64,
                ];
                let ses = if cfg.with_asymptotic_se {
                    Some(vec![
                        ml.std_errors[0],
                        ml.std_errors[1],
                        ml.std_errors[2],
                        ml.std_errors[3],
                        f64::NAN,
                    ])
                } else {
                    None
                };
                EstimateSet { values, ses }
            }
        };
        out.push((estimator, set));
    }
    Ok(out)
}

/// Run the full table. Deterministic given `(config, seed)` for any thread
/// count: every replication owns its seeded streams and results are reduced
/// in replication order.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<McReport> {
    cfg.validate()?;

    let outcomes: Vec<(u64, Result<Vec<(EstimatorId, EstimateSet)>>)> = (0..cfg.replications
        as u64)
        .into_par_iter()
        .map(|rep| (rep, run_replication(cfg, rep)))
        .collect();

    let mut kept: Vec<(u64, Vec<(EstimatorId, EstimateSet)>)> = Vec::new();
    let mut dropped = 0usize;
    for (rep, res) in outcomes {
        match res {
            Ok(sets) => kept.push((rep, sets)),
            Err(e) => {
                dropped += 1;
                eprintln!("replication {rep} dropped: {e}");
            }
        }
    }
    if kept.is_empty() {
        return Err(AmlError::TooManyDropped {
            dropped,
            total: cfg.replications,
        });
    }

    // Parameter names from a throwaway model instance.
    let mut name_stream = RngStream::new(0, 0);
    let template = build_model(cfg, &mut name_stream).param_template();
    let names: Vec<String> = template.names().to_vec();
    let fixed = template.fixed_mask().to_vec();
    let p = names.len();

    let mut raw = Vec::new();
    for (rep, sets) in &kept {
        for (est, set) in sets {
            for j in 0..p {
                raw.push(RawRecord {
                    replication: *rep,
                    estimator: est.as_str().into(),
                    parameter: names[j].clone(),
                    estimate: set.values[j],
                    std_error: set.ses.as_ref().map(|s| s[j]),
                });
            }
        }
    }

    // Per-estimator accuracy rows.
    let mut rows = Vec::new();
    for &est in &cfg.estimators {
        let sets: Vec<&EstimateSet> = kept
            .iter()
            .map(|(_, sets)| {
                &sets
                    .iter()
                    .find(|(e, _)| *e == est)
                    .expect("estimator present")
                    .1
            })
            .collect();

        // Standard-error ratio against the aml estimator, when ml ran.
        let aml_sets: Option<Vec<&EstimateSet>> = if est == EstimatorId::Ml {
            None
        } else if est == EstimatorId::Aml && cfg.estimators.contains(&EstimatorId::Ml) {
            Some(
                kept.iter()
                    .map(|(_, sets)| {
                        &sets
                            .iter()
                            .find(|(e, _)| *e == EstimatorId::Ml)
                            .expect("ml present")
                            .1
                    })
                    .collect(),
            )
        } else {
            None
        };

        for j in 0..p {
            // The constrained fit does not estimate pinned components.
            if est == EstimatorId::Auxiliary && fixed[j] {
                continue;
            }
            let estimates: Vec<f64> = sets.iter().map(|s| s.values[j]).collect();
            let mean = stats::mean(&estimates);
            let bias = mean - cfg.truth[j];
            let mse = estimates
                .iter()
                .map(|v| (v - cfg.truth[j]) * (v - cfg.truth[j]))
                .sum::<f64>()
                / estimates.len() as f64;
            let mc_sd = stats::sd(&estimates);
            let cov = estimates
                .iter()
                .filter(|v| (**v - cfg.truth[j]).abs() <= 1.96 * mc_sd)
                .count() as f64
                / estimates.len() as f64;
            let cov_wald = if sets.iter().all(|s| s.ses.is_some()) {
                let mut hits = 0usize;
                let mut total = 0usize;
                for s in &sets {
                    let se = s.ses.as_ref().unwrap()[j];
                    if se.is_finite() {
                        total += 1;
                        if (s.values[j] - cfg.truth[j]).abs() <= 1.96 * se {
                            hits += 1;
                        }
                    }
                }
                (total > 0).then(|| hits as f64 / total as f64)
            } else {
                None
            };
            let se_ratio = aml_sets.as_ref().and_then(|ml| {
                let mut ratios = Vec::new();
                for (aml_set, ml_set) in sets.iter().zip(ml.iter()) {
                    if let (Some(a), Some(m)) = (&aml_set.ses, &ml_set.ses) {
                        if a[j].is_finite() && m[j].is_finite() && a[j] > 0.0 {
                            ratios.push(m[j] / a[j]);
                        }
                    }
                }
                (!ratios.is_empty()).then(|| stats::mean(&ratios))
            });

            rows.push(AccuracyRow {
                estimator: est.as_str().into(),
                parameter: names[j].clone(),
                mean,
                bias,
                mse,
                cov,
                cov_wald,
                se_ratio,
            });
        }
    }

    Ok(McReport {
        config: cfg.clone(),
        parameter_names: names,
        rows,
        raw,
        dropped,
    })
}

impl McReport {
    pub fn row(&self, estimator: &str, parameter: &str) -> Option<&AccuracyRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.parameter == parameter)
    }

    /// Per-replication estimates for one estimator and parameter, in
    /// replication order.
    pub fn estimates(&self, estimator: &str, parameter: &str) -> Vec<f64> {
        self.raw
            .iter()
            .filter(|r| r.estimator == estimator && r.parameter == parameter)
            .map(|r| r.estimate)
            .collect()
    }
}
