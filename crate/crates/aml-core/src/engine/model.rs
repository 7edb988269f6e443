//! The capability contract every model plug-in supplies, and the dataset
//! container shared across models.

use crate::engine::params::ParamVector;
use crate::error::{AmlError, Result};
use crate::numerics::rng::RngStream;
use nalgebra::DMatrix;

/// Observed endogenous data. Exogenous designs (regressors) belong to the
/// model instance, since simulation conditions on the observed design.
#[derive(Clone, Debug)]
pub struct Dataset {
    y: Vec<f64>,
    /// `None` means fully observed; otherwise marks which outcomes exist.
    observed: Option<Vec<bool>>,
}

impl Dataset {
    /// Fully observed scalar series.
    pub fn series(y: Vec<f64>) -> Self {
        Self { y, observed: None }
    }

    /// Outcome vector with missing entries (`y[i]` is meaningful only where
    /// `observed[i]`).
    pub fn censored(y: Vec<f64>, observed: Vec<bool>) -> Self {
        assert_eq!(y.len(), observed.len());
        Self {
            y,
            observed: Some(observed),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Raw outcome storage (check `is_observed` for censored data).
    pub fn raw(&self) -> &[f64] {
        &self.y
    }

    /// The fully observed series; errors when the data carry missingness.
    pub fn values(&self) -> Result<&[f64]> {
        if self.observed.is_some() {
            return Err(AmlError::InvalidParam(
                "dataset has missing outcomes; use raw()/is_observed()".into(),
            ));
        }
        Ok(&self.y)
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.observed.as_ref().map_or(true, |o| o[i])
    }

    pub fn observed_count(&self) -> usize {
        match &self.observed {
            None => self.y.len(),
            Some(o) => o.iter().filter(|&&b| b).count(),
        }
    }
}

/// Capability record a model supplies to the engine.
///
/// Index conventions: every slice of length `p` (values, scores, bounds) is
/// ordered like [`Model::param_template`]. The pseudo-score is always
/// full-dimensional (`p` components) even though it is only defined for
/// parameter values inside the constrained set.
pub trait Model: Sync {
    fn name(&self) -> &'static str;

    /// Parameter names, constraint mask and pinned values, integer mask.
    /// The `values` of the template are a neutral default.
    fn param_template(&self) -> ParamVector;

    /// Box bounds for each structural component.
    fn bounds(&self) -> Vec<(f64, f64)>;

    /// Average constrained log-likelihood at `beta` (a full-length vector
    /// lying in the constrained set).
    fn loglik_constrained(&self, beta: &[f64], data: &Dataset) -> Result<f64>;

    /// Full-dimensional pseudo-score at `beta` in the constrained set.
    fn pseudo_score(&self, beta: &[f64], data: &Dataset) -> Result<Vec<f64>>;

    /// Per-observation pseudo-score contributions (rows are observations,
    /// columns the `p` components; column means equal `pseudo_score`).
    fn score_contributions(&self, beta: &[f64], data: &Dataset) -> Result<DMatrix<f64>>;

    /// Simulate a synthetic dataset of length `len` at the unconstrained
    /// structural value `theta`, deterministically in `stream`.
    fn simulate(&self, theta: &[f64], len: usize, stream: &mut RngStream) -> Result<Dataset>;

    /// Pseudo-score of one simulated path at `beta`, for a path generated at
    /// `theta`. The default simulates and scores the realized dataset.
    ///
    /// Models whose simulated data contain discrete draws (selection
    /// indicators, binary outcomes) should override this with the
    /// conditional expectation of the score given the continuous latents:
    /// same expectation, strictly smaller variance, and smooth in `theta`,
    /// which the derivative-based matching solver needs.
    fn simulated_pseudo_score(
        &self,
        beta: &[f64],
        theta: &[f64],
        len: usize,
        stream: &mut RngStream,
    ) -> Result<Vec<f64>> {
        let data = self.simulate(theta, len, stream)?;
        self.pseudo_score(beta, &data)
    }

    /// Relative finite-difference step for derivatives of the simulated
    /// average score in the structural parameters. Models whose simulated
    /// paths move on a discrete grid (regime switches) need a coarser step
    /// than smooth simulators.
    fn criterion_fd_step(&self) -> f64 {
        1e-4
    }

    /// Warm-start hint for the solver's walk along an integer component:
    /// given the current point and a new value for component `dim`, propose
    /// continuous components to refine from. Defaults to carrying the point
    /// over unchanged.
    fn integer_step_hint(&self, theta: &[f64], _dim: usize, new_value: f64) -> Vec<f64> {
        let mut th = theta.to_vec();
        th[_dim] = new_value;
        th
    }

    /// Starting point for the constrained fit (full length, fixed components
    /// already pinned).
    fn fit_start(&self, data: &Dataset) -> Vec<f64>;

    /// Bartlett lag count for the long-run variance of the score
    /// contributions. Zero for models scored on i.i.d. observations.
    fn lrv_lags(&self, _t: usize) -> usize {
        0
    }
}
