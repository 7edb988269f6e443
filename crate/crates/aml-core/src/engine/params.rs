//! Named, ordered structural parameter vectors with constraint metadata.

use crate::error::{AmlError, Result};
use serde::{Deserialize, Serialize};

/// A structural parameter vector together with the description of the
/// constrained set: which components are pinned (and to what value) in the
/// tractable sub-model, and which components are integer-valued.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamVector {
    names: Vec<String>,
    values: Vec<f64>,
    /// `true` marks a component that the constrained sub-model fixes.
    fixed_mask: Vec<bool>,
    /// Pinned value for each fixed component (ignored where `fixed_mask` is false).
    fixed_values: Vec<f64>,
    integer_mask: Vec<bool>,
}

impl ParamVector {
    pub fn new(
        names: Vec<String>,
        values: Vec<f64>,
        fixed_mask: Vec<bool>,
        fixed_values: Vec<f64>,
        integer_mask: Vec<bool>,
    ) -> Result<Self> {
        let p = names.len();
        if values.len() != p
            || fixed_mask.len() != p
            || fixed_values.len() != p
            || integer_mask.len() != p
        {
            return Err(AmlError::InvalidParam(
                "parameter vector fields must share one length".into(),
            ));
        }
        Ok(Self {
            names,
            values,
            fixed_mask,
            fixed_values,
            integer_mask,
        })
    }

    /// Fully free parameter vector (no constraint, no integer components).
    pub fn free(names: Vec<String>, values: Vec<f64>) -> Self {
        let p = names.len();
        Self {
            names,
            values,
            fixed_mask: vec![false; p],
            fixed_values: vec![0.0; p],
            integer_mask: vec![false; p],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fixed_mask(&self) -> &[bool] {
        &self.fixed_mask
    }

    pub fn integer_mask(&self) -> &[bool] {
        &self.integer_mask
    }

    /// Number of free components under the constraint.
    pub fn free_count(&self) -> usize {
        self.fixed_mask.iter().filter(|&&m| !m).count()
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| !self.fixed_mask[j]).collect()
    }

    pub fn integer_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.integer_mask[j]).collect()
    }

    /// Replace the values, keeping the constraint metadata.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(AmlError::InvalidParam(format!(
                "expected {} values, got {}",
                self.len(),
                values.len()
            )));
        }
        let mut out = self.clone();
        out.values = values;
        Ok(out)
    }

    /// Project the values onto the constrained set (pin fixed components).
    pub fn projected(&self) -> Self {
        let mut out = self.clone();
        for j in 0..out.len() {
            if out.fixed_mask[j] {
                out.values[j] = out.fixed_values[j];
            }
        }
        out
    }

    /// Whether the values lie in the constrained set exactly.
    pub fn in_constrained_set(&self) -> bool {
        self.values
            .iter()
            .zip(&self.fixed_mask)
            .zip(&self.fixed_values)
            .all(|((v, &m), fv)| !m || v == fv)
    }

    /// Assemble a full vector from free components, pinning the rest.
    pub fn full_from_free(&self, free: &[f64]) -> Vec<f64> {
        let mut out = self.fixed_values.clone();
        let mut k = 0;
        for j in 0..self.len() {
            if !self.fixed_mask[j] {
                out[j] = free[k];
                k += 1;
            }
        }
        debug_assert_eq!(k, free.len());
        out
    }

    /// Extract the free components of a full vector.
    pub fn free_from_full(&self, full: &[f64]) -> Vec<f64> {
        (0..self.len())
            .filter(|&j| !self.fixed_mask[j])
            .map(|j| full[j])
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.values[j])
    }
}
