//! Constrained (auxiliary) fit: maximize the tractable log-likelihood over
//! the free components of the constrained set.

use crate::engine::model::{Dataset, Model};
use crate::engine::params::ParamVector;
use crate::error::{AmlError, Result};
use crate::numerics::optim::{bfgs, OptimConfig};

/// Maximize `loglik_constrained` over the free directions, holding pinned
/// components at their constraint values. Returns the full-length estimate.
pub fn constrained_fit<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    cfg: &OptimConfig,
) -> Result<ParamVector> {
    if data.is_empty() {
        return Err(AmlError::Config("dataset is empty".into()));
    }
    let template = model.param_template();
    let start_full = {
        let pv = template.with_values(model.fit_start(data))?.projected();
        pv.values().to_vec()
    };
    let start_free = template.free_from_full(&start_full);

    let bounds_full = model.bounds();
    let bounds_free: Vec<(f64, f64)> = template
        .free_indices()
        .into_iter()
        .map(|j| bounds_full[j])
        .collect();

    let objective = |free: &[f64]| -> f64 {
        let full = template.full_from_free(free);
        match model.loglik_constrained(&full, data) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        }
    };

    let out = bfgs(objective, &start_free, &bounds_free, cfg).map_err(|e| match e {
        AmlError::NonFiniteObjective { point, value } => AmlError::Optim(format!(
            "constrained log-likelihood non-finite at start {point:?} (value {value})"
        )),
        other => other,
    })?;

    template.with_values(template.full_from_free(&out.x))
}
