//! Bartlett-kernel long-run variance estimation for vector series.

use crate::error::{AmlError, Result};
use nalgebra::DMatrix;

/// Conventional bandwidth rule `floor(4 (T/100)^{2/9})`.
pub fn bartlett_default_lags(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Long-run covariance of the rows of `series` (a T x p matrix of
/// per-observation contributions), using a Bartlett kernel with `lags`
/// autocovariance terms. `lags = 0` reduces to the sample covariance.
///
/// The result is symmetric positive semidefinite by construction.
pub fn long_run_variance(series: &DMatrix<f64>, lags: usize) -> Result<DMatrix<f64>> {
    let t = series.nrows();
    let p = series.ncols();
    if t <= lags {
        return Err(AmlError::LrvTooShort { t, lags });
    }
    let tf = t as f64;

    // Demean columns.
    let mut c = series.clone();
    for j in 0..p {
        let mean = c.column(j).sum() / tf;
        for i in 0..t {
            c[(i, j)] -= mean;
        }
    }

    let gamma = |lag: usize| -> DMatrix<f64> {
        let mut g = DMatrix::zeros(p, p);
        for s in lag..t {
            let row_s = c.row(s);
            let row_l = c.row(s - lag);
            for a in 0..p {
                for b in 0..p {
                    g[(a, b)] += row_s[a] * row_l[b];
                }
            }
        }
        g / tf
    };

    let mut lrv = gamma(0);
    for lag in 1..=lags {
        let w = 1.0 - lag as f64 / (lags as f64 + 1.0);
        let g = gamma(lag);
        lrv += (&g + g.transpose()) * w;
    }
    // Exact symmetry against round-off.
    let lrv = (&lrv + lrv.transpose()) * 0.5;
    Ok(lrv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    #[test]
    fn constant_series_has_zero_variance() {
        let m = DMatrix::from_element(500, 3, 2.7);
        let v = long_run_variance(&m, 5).unwrap();
        assert!(v.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn iid_standard_normal_has_unit_variance() {
        let t = 100_000;
        let mut stream = RngStream::new(11, 0);
        let data = DMatrix::from_fn(t, 1, |_, _| stream.standard_normal());
        let v = long_run_variance(&data, 0).unwrap();
        assert!((v[(0, 0)] - 1.0).abs() < 0.02, "var = {}", v[(0, 0)]);
    }

    #[test]
    fn ar1_long_run_variance_matches_closed_form() {
        // x_t = 0.5 x_{t-1} + e_t has long-run variance 1/(1-0.5)^2 = 4.
        let t = 100_000;
        let mut stream = RngStream::new(12, 0);
        let mut x = 0.0;
        let data = DMatrix::from_fn(t, 1, |_, _| {
            x = 0.5 * x + stream.standard_normal();
            x
        });
        let v = long_run_variance(&data, 40).unwrap();
        assert!(
            (v[(0, 0)] - 4.0).abs() < 0.4,
            "long-run var = {}",
            v[(0, 0)]
        );
    }

    #[test]
    fn too_few_observations_is_an_error() {
        let m = DMatrix::zeros(5, 1);
        assert!(long_run_variance(&m, 5).is_err());
    }

    #[test]
    fn result_is_psd_on_correlated_noise() {
        let t = 2000;
        let mut stream = RngStream::new(13, 0);
        let mut u = 0.0;
        let data = DMatrix::from_fn(t, 2, |_, j| {
            if j == 0 {
                u = 0.8 * u + stream.standard_normal();
                u
            } else {
                0.5 * u + stream.standard_normal()
            }
        });
        let v = long_run_variance(&data, 20).unwrap();
        let eig = nalgebra::SymmetricEigen::new(v);
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
    }
}
