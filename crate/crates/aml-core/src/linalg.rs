//! Small dense-matrix helpers on top of nalgebra.

use crate::error::{AmlError, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Invert a square matrix, failing loudly on singularity.
pub fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(AmlError::SingularJacobian)
}

/// Symmetrize and clamp negative eigenvalues to zero.
pub fn psd_floor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let q = eig.eigenvectors;
    &q * DMatrix::from_diagonal(&vals) * q.transpose()
}

/// Smallest eigenvalue of the symmetrized matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_removes_negative_modes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]); // eigenvalues 3, -1
        let f = psd_floor(&m);
        assert!(min_eigenvalue(&f) >= -1e-12);
        // The positive mode is preserved.
        assert!((f[(0, 0)] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn singular_inverse_is_an_error() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(invert(&m).is_err());
    }
}
