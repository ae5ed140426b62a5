use nalgebra::DMatrix;

use super::RANK_TOL;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit<T: Real> {
    /// `d_Y × k`.
    pub coef: DMatrix<T>,
    /// The design was rank deficient and a pseudo-inverse was used.
    pub rank_deficient: bool,
}

/// Least squares of `y` (`d_Y × n`) on `regressors` (`k × n`) without intercept.
pub fn ols_fit<T: Real>(y: &DMatrix<T>, regressors: &DMatrix<T>) -> Result<OlsFit<T>> {
    let n = y.ncols();
    if regressors.ncols() != n {
        return Err(Error::dims("response and regressors differ in column count"));
    }
    if n <= regressors.nrows() {
        return Err(Error::InsufficientSamples(format!("{n} observations for {} regressors", regressors.nrows())));
    }
    let gram = regressors * regressors.transpose();
    let k = gram.nrows();
    let rank_deficient = linalg::rank(&gram, T::of(RANK_TOL)) < k;
    let inv = if rank_deficient {
        linalg::pinv(&gram, T::of(RANK_TOL))
    } else {
        linalg::inverse(&gram, "OLS Gram")?
    };
    Ok(OlsFit { coef: y * regressors.transpose() * inv, rank_deficient })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dmat, max_abs};

    #[test]
    fn exact_data_exact_coefficients() {
        let x: DMatrix<f64> = dmat(2, 5, &[1.0, 2.0, 3.0, 4.0, 5.0, 1.0, 0.0, 1.0, 0.0, 2.0]);
        let y = dmat(1, 2, &[0.5, -2.0]) * &x;
        let fit = ols_fit(&y, &x).unwrap();
        assert!(max_abs(&(fit.coef - dmat(1, 2, &[0.5, -2.0]))) < 1e-12);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn collinear_design_is_flagged() {
        let x: DMatrix<f64> = dmat(2, 4, &[1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 6.0, 8.0]);
        let y = dmat(1, 4, &[1.0, 2.0, 3.0, 4.0]);
        let fit = ols_fit(&y, &x).unwrap();
        assert!(fit.rank_deficient);
        assert!(max_abs(&(&fit.coef * &x - y)) < 1e-10);
    }
}
