//! Experiment configuration and the built-in presets.
//!
//! A preset fully determines every numeric field of an experiment, so a
//! table can be regenerated from its name and a master seed alone. Presets
//! ending in `-desk` are reduced-scale variants sized for a laptop; the
//! full-scale designs are provided for completeness and carry their
//! published-scale replication counts.

use crate::error::{AmlError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    Tobit,
    Msm,
    Stable,
    GarchSv,
    Probit,
    GaussianLocation,
}

impl ModelId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelId::Tobit => "tobit",
            ModelId::Msm => "msm",
            ModelId::Stable => "stable",
            ModelId::GarchSv => "garch-sv",
            ModelId::Probit => "probit",
            ModelId::GaussianLocation => "gaussian-location",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tobit" => Ok(ModelId::Tobit),
            "msm" => Ok(ModelId::Msm),
            "stable" => Ok(ModelId::Stable),
            "garch-sv" | "garchsv" | "gsv" => Ok(ModelId::GarchSv),
            "probit" => Ok(ModelId::Probit),
            "gaussian-location" | "gaussian" => Ok(ModelId::GaussianLocation),
            other => Err(AmlError::Config(format!("unknown model id '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorId {
    /// The constrained fit alone.
    Auxiliary,
    /// Score matching.
    Aml,
    /// Exact maximum likelihood where feasible (multifractal grid search).
    Ml,
}

impl EstimatorId {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::Auxiliary => "auxiliary",
            EstimatorId::Aml => "aml",
            EstimatorId::Ml => "ml",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub preset: String,
    pub model: ModelId,
    /// Structural truth, ordered like the model's parameter template.
    pub truth: Vec<f64>,
    pub sample_size: usize,
    pub replications: usize,
    /// Simulation paths per criterion evaluation.
    pub sim_paths: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorId>,
    /// Compute per-replication sandwich standard errors (Wald coverage and
    /// standard-error ratios need them).
    pub with_asymptotic_se: bool,
    /// Component-count grid for the maximum-likelihood estimator.
    #[serde(default)]
    pub ml_grid: Vec<usize>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(AmlError::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.replications == 0 {
            return Err(AmlError::Config(
                "a Monte Carlo run needs at least one replication".into(),
            ));
        }
        if self.sample_size < 10 {
            return Err(AmlError::Config("sample size below 10".into()));
        }
        if self.sim_paths == 0 {
            return Err(AmlError::Config("need at least one simulation path".into()));
        }
        if self.estimators.is_empty() {
            return Err(AmlError::Config("no estimators requested".into()));
        }
        if self.estimators.contains(&EstimatorId::Ml) && self.model != ModelId::Msm {
            return Err(AmlError::Config(
                "exact maximum likelihood is only wired for the multifractal model".into(),
            ));
        }
        let expected = match self.model {
            ModelId::Tobit => 6,
            ModelId::Msm => 5,
            ModelId::Stable => 4,
            ModelId::GarchSv => 5,
            ModelId::Probit => 2,
            ModelId::GaussianLocation => 1,
        };
        if self.truth.len() != expected {
            return Err(AmlError::Config(format!(
                "model {} expects {expected} structural parameters, got {}",
                self.model.as_str(),
                self.truth.len()
            )));
        }
        Ok(())
    }
}

fn base(preset: &str, model: ModelId, truth: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        preset: preset.to_string(),
        model,
        truth,
        sample_size: 1000,
        replications: 100,
        sim_paths: 10,
        seed: 20_240_501,
        estimators: vec![EstimatorId::Auxiliary, EstimatorId::Aml],
        with_asymptotic_se: false,
        ml_grid: vec![],
    }
}

/// Built-in experiment presets, regenerable by name.
pub fn presets() -> Vec<ExperimentConfig> {
    let tobit_truth = vec![0.1, 0.2, 0.1, 0.2, 1.0, 0.5];
    // Monte Carlo design of the 4-component volatility table (table caption
    // values); `table2-text` carries the alternative parameterization quoted
    // in the accompanying text.
    let msm4_truth = vec![1.5, 0.4, 5.0, 0.01, 4.0];
    let msm4_text_truth = vec![1.5, 0.2, 4.0, 0.01, 4.0];
    let msm18_truth = vec![1.2708, 0.1215, 1.5663, 0.0149, 18.0];
    let stable_truth = vec![1.8, -0.1, 0.1, 0.0];

    vec![
        ExperimentConfig {
            sample_size: 1000,
            replications: 1000,
            with_asymptotic_se: true,
            ..base("table1", ModelId::Tobit, tobit_truth.clone())
        },
        ExperimentConfig {
            sample_size: 10_000,
            replications: 1000,
            with_asymptotic_se: true,
            ..base("table1-large", ModelId::Tobit, tobit_truth.clone())
        },
        ExperimentConfig {
            sample_size: 1000,
            replications: 200,
            with_asymptotic_se: true,
            ..base("table1-desk", ModelId::Tobit, tobit_truth)
        },
        ExperimentConfig {
            sample_size: 5000,
            replications: 1000,
            sim_paths: 100,
            estimators: vec![EstimatorId::Ml, EstimatorId::Aml],
            with_asymptotic_se: true,
            ml_grid: (1..=7).collect(),
            ..base("table2", ModelId::Msm, msm4_truth.clone())
        },
        ExperimentConfig {
            sample_size: 2000,
            replications: 100,
            sim_paths: 50,
            estimators: vec![EstimatorId::Ml, EstimatorId::Aml],
            with_asymptotic_se: true,
            ml_grid: (1..=7).collect(),
            ..base("table2-desk", ModelId::Msm, msm4_truth)
        },
        ExperimentConfig {
            sample_size: 5000,
            replications: 1000,
            sim_paths: 100,
            estimators: vec![EstimatorId::Ml, EstimatorId::Aml],
            with_asymptotic_se: true,
            ml_grid: (1..=7).collect(),
            ..base("table2-text", ModelId::Msm, msm4_text_truth)
        },
        ExperimentConfig {
            sample_size: 23_202,
            replications: 1000,
            sim_paths: 100,
            with_asymptotic_se: true,
            ..base("table3", ModelId::Msm, msm18_truth.clone())
        },
        ExperimentConfig {
            sample_size: 8000,
            replications: 20,
            sim_paths: 50,
            with_asymptotic_se: true,
            ..base("table3-desk", ModelId::Msm, msm18_truth)
        },
        ExperimentConfig {
            sample_size: 10_000,
            replications: 1000,
            with_asymptotic_se: true,
            ..base("table6", ModelId::Stable, stable_truth.clone())
        },
        ExperimentConfig {
            sample_size: 10_000,
            replications: 100,
            with_asymptotic_se: true,
            ..base("table6-desk", ModelId::Stable, stable_truth)
        },
        ExperimentConfig {
            sample_size: 5000,
            replications: 100,
            estimators: vec![EstimatorId::Aml],
            with_asymptotic_se: true,
            ..base("gsv-check", ModelId::GarchSv, vec![0.0, 0.1, 0.2, 0.02, 0.5])
        },
        ExperimentConfig {
            sample_size: 5000,
            replications: 100,
            estimators: vec![EstimatorId::Aml],
            with_asymptotic_se: true,
            ..base("probit-check", ModelId::Probit, vec![0.5, 0.5])
        },
    ]
}

pub fn preset_names() -> Vec<String> {
    presets().into_iter().map(|p| p.preset).collect()
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    presets()
        .into_iter()
        .find(|p| p.preset == name)
        .ok_or_else(|| AmlError::Config(format!("unknown preset '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for p in presets() {
            p.validate().unwrap_or_else(|e| panic!("{}: {e}", p.preset));
        }
    }

    #[test]
    fn zero_replications_rejected() {
        let mut cfg = preset("table1-desk").unwrap();
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ml_estimator_restricted_to_the_multifractal_model() {
        let mut cfg = preset("table1-desk").unwrap();
        cfg.estimators = vec![EstimatorId::Ml];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = preset("table2-desk").unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.preset, cfg.preset);
        assert_eq!(back.truth, cfg.truth);
        assert_eq!(back.ml_grid, cfg.ml_grid);
    }
}
