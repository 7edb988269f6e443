//! Stamped CSV/JSON emission. Every table row carries the preset id, the
//! master seed, and the toolkit version, so any artifact can be regenerated.

use super::monte_carlo::McReport;
use super::timing::TimingRow;
use crate::error::Result;
use std::io::Write;
use std::path::Path;

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.10}"),
        _ => String::new(),
    }
}

pub fn write_accuracy_csv(report: &McReport, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "preset,seed,version,estimator,parameter,mean,bias,mse,cov,cov_wald,se_ratio"
    )?;
    for row in &report.rows {
        writeln!(
            f,
            "{},{},{},{},{},{:.10},{:.10},{:.12},{:.4},{},{}",
            report.config.preset,
            report.config.seed,
            crate::TOOLKIT_VERSION,
            row.estimator,
            row.parameter,
            row.mean,
            row.bias,
            row.mse,
            row.cov,
            fmt_opt(row.cov_wald),
            fmt_opt(row.se_ratio),
        )?;
    }
    Ok(())
}

pub fn write_raw_csv(report: &McReport, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "preset,seed,version,replication,estimator,parameter,estimate,std_error"
    )?;
    for r in &report.raw {
        writeln!(
            f,
            "{},{},{},{},{},{},{:.12},{}",
            report.config.preset,
            report.config.seed,
            crate::TOOLKIT_VERSION,
            r.replication,
            r.estimator,
            r.parameter,
            r.estimate,
            fmt_opt(r.std_error),
        )?;
    }
    Ok(())
}

pub fn write_timing_csv(rows: &[TimingRow], seed: u64, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "preset,seed,version,k_bar,loglik_secs,criterion_secs")?;
    for r in rows {
        writeln!(
            f,
            "timing,{},{},{},{},{:.6e}",
            seed,
            crate::TOOLKIT_VERSION,
            r.k_bar,
            fmt_opt(r.loglik_secs),
            r.criterion_secs,
        )?;
    }
    Ok(())
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::AmlError::Config(format!("JSON serialization failed: {e}")))?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
