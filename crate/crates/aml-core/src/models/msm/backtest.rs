//! Forecast evaluation: value-at-risk failure rates and the expected
//! -shortfall accuracy regression.

use crate::error::{AmlError, Result};
use crate::stats::{ols_line, OlsLine};

/// Fraction of dates whose realized return fell below the loss threshold.
pub fn failure_rate(returns: &[f64], var_series: &[f64]) -> f64 {
    assert_eq!(returns.len(), var_series.len());
    let hits = returns
        .iter()
        .zip(var_series)
        .filter(|(r, v)| **r < -**v)
        .count();
    hits as f64 / returns.len() as f64
}

/// Regress realized tail returns on the matching expected-shortfall
/// forecasts. Accurate forecasts give intercept 0 and slope 1; the joint
/// Wald test of that hypothesis is reported as a chi-squared(2) p-value.
pub fn es_backtest(tail_returns: &[f64], forecast_es: &[f64]) -> Result<OlsLine> {
    if tail_returns.len() < 10 {
        return Err(AmlError::Config(format!(
            "expected-shortfall regression needs at least 10 tail observations, got {}",
            tail_returns.len()
        )));
    }
    if tail_returns.len() != forecast_es.len() {
        return Err(AmlError::Config(
            "tail returns and forecasts must be paired".into(),
        ));
    }
    ols_line(tail_returns, forecast_es)
}
