//! Estimation runs on user-supplied datasets.

use super::config::ModelId;
use crate::engine::{
    parametric_bootstrap, solve_aml, Dataset, Model, SimBank, SolveOptions,
};
use crate::error::{AmlError, Result};
use crate::ml::{msm_ml_fit, MlGridResult};
use crate::models::garch_sv::GsvModel;
use crate::models::gaussian::GaussianLocation;
use crate::models::msm::MsmModel;
use crate::models::probit::ProbitModel;
use crate::models::stable::StableModel;
use crate::models::tobit::TobitModel;
use crate::numerics::optim::OptimConfig;
use crate::stats;
use nalgebra::DMatrix;
use serde::Serialize;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct EmpiricalRequest {
    pub model: ModelId,
    pub data_path: String,
    /// Demean the series before estimation (volatility models).
    pub demean: bool,
    pub sim_paths: usize,
    pub seed: u64,
    /// `"aml"` or `"ml"` (ml only for the multifractal model).
    pub estimator: String,
    /// Parametric bootstrap replications for standard errors (0 = off).
    pub bootstrap: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub model: String,
    pub data_path: String,
    pub observations: usize,
    pub demeaned: bool,
    pub seed: u64,
    pub sim_paths: usize,
    pub version: String,
    pub estimator: String,
    pub parameter_names: Vec<String>,
    pub estimates: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub bootstrap_std_errors: Option<Vec<f64>>,
    pub bootstrap_dropped: Option<usize>,
    pub criterion: Option<f64>,
    pub converged: bool,
    pub ml_grid: Option<MlGridResult>,
}

/// Read a single-column CSV of values (optional header).
pub fn read_returns(path: &str) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let field = trimmed.split(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue, // header
            Err(e) => {
                return Err(AmlError::Parse {
                    path: path.into(),
                    line: i + 1,
                    reason: e.to_string(),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(AmlError::Parse {
            path: path.into(),
            line: 1,
            reason: "no numeric observations found".into(),
        });
    }
    Ok(out)
}

/// Read a selection-model CSV: column `y` (empty field = missing outcome),
/// then `x*` columns, then `z*` columns. Column roles are taken from the
/// header prefixes.
pub fn read_tobit_csv(path: &str) -> Result<(Dataset, TobitModel)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(Path::new(path))
        .map_err(|e| AmlError::Parse {
            path: path.into(),
            line: 1,
            reason: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| AmlError::Parse {
            path: path.into(),
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let mut x_cols = Vec::new();
    let mut z_cols = Vec::new();
    let mut y_col = None;
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim().to_lowercase();
        if h == "y" {
            y_col = Some(i);
        } else if h.starts_with('x') {
            x_cols.push(i);
        } else if h.starts_with('z') {
            z_cols.push(i);
        }
    }
    let y_col = y_col.ok_or_else(|| AmlError::Parse {
        path: path.into(),
        line: 1,
        reason: "missing 'y' column".into(),
    })?;
    if x_cols.is_empty() || z_cols.is_empty() {
        return Err(AmlError::Parse {
            path: path.into(),
            line: 1,
            reason: "need x… and z… columns".into(),
        });
    }

    let mut y = Vec::new();
    let mut observed = Vec::new();
    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut z_rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| AmlError::Parse {
            path: path.into(),
            line,
            reason: e.to_string(),
        })?;
        let parse = |i: usize| -> Result<f64> {
            record[i].trim().parse::<f64>().map_err(|e| AmlError::Parse {
                path: path.into(),
                line,
                reason: format!("column {}: {e}", headers[i].to_owned()),
            })
        };
        let yf = record[y_col].trim();
        if yf.is_empty() {
            y.push(0.0);
            observed.push(false);
        } else {
            y.push(yf.parse::<f64>().map_err(|e| AmlError::Parse {
                path: path.into(),
                line,
                reason: format!("column y: {e}"),
            })?);
            observed.push(true);
        }
        x_rows.push(x_cols.iter().map(|&i| parse(i)).collect::<Result<_>>()?);
        z_rows.push(z_cols.iter().map(|&i| parse(i)).collect::<Result<_>>()?);
    }
    if y.is_empty() {
        return Err(AmlError::Parse {
            path: path.into(),
            line: 2,
            reason: "no data rows".into(),
        });
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, x_cols.len(), |r, c| x_rows[r][c]);
    let z = DMatrix::from_fn(n, z_cols.len(), |r, c| z_rows[r][c]);
    Ok((Dataset::censored(y, observed), TobitModel::new(x, z)?))
}

/// Read a binary-outcome CSV: column `y` (0/1) then `x*` columns.
pub fn read_probit_csv(path: &str) -> Result<(Dataset, ProbitModel)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(Path::new(path))
        .map_err(|e| AmlError::Parse {
            path: path.into(),
            line: 1,
            reason: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| AmlError::Parse {
            path: path.into(),
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let mut x_cols = Vec::new();
    let mut y_col = None;
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim().to_lowercase();
        if h == "y" {
            y_col = Some(i);
        } else if h.starts_with('x') {
            x_cols.push(i);
        }
    }
    let y_col = y_col.ok_or_else(|| AmlError::Parse {
        path: path.into(),
        line: 1,
        reason: "missing 'y' column".into(),
    })?;
    let mut y = Vec::new();
    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| AmlError::Parse {
            path: path.into(),
            line,
            reason: e.to_string(),
        })?;
        y.push(
            record[y_col]
                .trim()
                .parse::<f64>()
                .map_err(|e| AmlError::Parse {
                    path: path.into(),
                    line,
                    reason: format!("column y: {e}"),
                })?,
        );
        x_rows.push(
            x_cols
                .iter()
                .map(|&i| {
                    record[i].trim().parse::<f64>().map_err(|e| AmlError::Parse {
                        path: path.into(),
                        line,
                        reason: e.to_string(),
                    })
                })
                .collect::<Result<_>>()?,
        );
    }
    if y.is_empty() {
        return Err(AmlError::Parse {
            path: path.into(),
            line: 2,
            reason: "no data rows".into(),
        });
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, x_cols.len(), |r, c| x_rows[r][c]);
    Ok((Dataset::series(y), ProbitModel::new(x)))
}

fn load(req: &EmpiricalRequest) -> Result<(Dataset, Box<dyn Model>)> {
    match req.model {
        ModelId::Tobit => {
            let (data, model) = read_tobit_csv(&req.data_path)?;
            Ok((data, Box::new(model)))
        }
        ModelId::Probit => {
            let (data, model) = read_probit_csv(&req.data_path)?;
            Ok((data, Box::new(model)))
        }
        _ => {
            let mut r = read_returns(&req.data_path)?;
            if req.demean {
                let m = stats::mean(&r);
                for v in r.iter_mut() {
                    *v -= m;
                }
            }
            let model: Box<dyn Model> = match req.model {
                ModelId::Msm => Box::new(MsmModel::default()),
                ModelId::Stable => Box::new(StableModel),
                ModelId::GarchSv => Box::new(GsvModel::default()),
                ModelId::GaussianLocation => Box::new(GaussianLocation),
                _ => unreachable!(),
            };
            Ok((Dataset::series(r), model))
        }
    }
}

pub fn run_empirical(req: &EmpiricalRequest) -> Result<FitReport> {
    let (data, model) = load(req)?;
    let template = model.param_template();
    let names: Vec<String> = template.names().to_vec();

    if req.estimator == "ml" {
        if req.model != ModelId::Msm {
            return Err(AmlError::Config(
                "exact maximum likelihood is only wired for the multifractal model".into(),
            ));
        }
        let returns = data.values()?;
        let grid: Vec<usize> = (1..=7).collect();
        let ml = msm_ml_fit(returns, &grid, &OptimConfig::for_likelihood())?;
        let best = ml.best();
        let estimates = vec![
            best.zeta[0],
            best.zeta[1],
            best.zeta[2],
            best.zeta[3],
            best.k_bar as f64,
        ];
        let ses = vec![
            ml.std_errors[0],
            ml.std_errors[1],
            ml.std_errors[2],
            ml.std_errors[3],
            f64::NAN,
        ];
        return Ok(FitReport {
            model: req.model.as_str().into(),
            data_path: req.data_path.clone(),
            observations: data.len(),
            demeaned: req.demean,
            seed: req.seed,
            sim_paths: req.sim_paths,
            version: crate::TOOLKIT_VERSION.into(),
            estimator: "ml".into(),
            parameter_names: names,
            estimates,
            std_errors: Some(ses),
            bootstrap_std_errors: None,
            bootstrap_dropped: None,
            criterion: None,
            converged: true,
            ml_grid: Some(ml),
        });
    }

    let bank = SimBank::new(req.seed, 0, req.sim_paths, data.len());
    let opts = SolveOptions {
        with_covariance: true,
        ..SolveOptions::default()
    };
    let res = solve_aml(model.as_ref(), &data, &bank, &opts)?;

    let (boot_se, boot_dropped) = if req.bootstrap > 0 {
        // A distinct seed branch keeps bootstrap streams disjoint from the
        // estimation bank.
        let boot_bank = SimBank::new(req.seed.wrapping_add(0x0b00), 0, req.sim_paths, data.len());
        let boot = parametric_bootstrap(
            model.as_ref(),
            &res.theta_hat,
            data.len(),
            req.bootstrap,
            &boot_bank,
            &opts,
        )?;
        (Some(boot.std_errors), Some(boot.dropped))
    } else {
        (None, None)
    };

    Ok(FitReport {
        model: req.model.as_str().into(),
        data_path: req.data_path.clone(),
        observations: data.len(),
        demeaned: req.demean,
        seed: req.seed,
        sim_paths: req.sim_paths,
        version: crate::TOOLKIT_VERSION.into(),
        estimator: "aml".into(),
        parameter_names: names,
        estimates: res.theta_hat.values().to_vec(),
        std_errors: res.std_errors,
        bootstrap_std_errors: boot_se,
        bootstrap_dropped: boot_dropped,
        criterion: Some(res.criterion),
        converged: res.converged,
        ml_grid: None,
    })
}
