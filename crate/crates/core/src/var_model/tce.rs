use nalgebra::{ClosedAddAssign, ClosedMulAssign, DMatrix, Scalar};
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Total causal effect of `sources` at time `t - lag` on `targets` at `t`.
///
/// `P_0 = I`, `P_l = Σ_{k=1}^{min(p,l)} A_k P_{l-k}`; `P_l` sums the products
/// over all compositions of `l` into parts of size at most `p`. Only ring
/// operations are used, so exact scalar types work as well.
pub fn total_causal_effect<T>(coeffs: &[DMatrix<T>], sources: &[usize], targets: &[usize], lag: usize) -> Result<DMatrix<T>>
where
    T: Scalar + Zero + One + ClosedAddAssign + ClosedMulAssign,
{
    if lag < 1 {
        return Err(Error::InvalidLag("total causal effects need lag >= 1".into()));
    }
    let Some(first) = coeffs.first() else {
        return Err(Error::dims("no coefficient matrices"));
    };
    let d = first.nrows();
    if coeffs.iter().any(|a| a.shape() != (d, d)) {
        return Err(Error::dims("coefficient matrices must share one square shape"));
    }
    if sources.iter().chain(targets).any(|&i| i >= d) {
        return Err(Error::dims(format!("component index out of range 0..{d}")));
    }
    let p = coeffs.len();
    let mut powers: Vec<DMatrix<T>> = vec![DMatrix::identity(d, d)];
    for l in 1..=lag {
        let mut acc = DMatrix::zeros(d, d);
        for k in 1..=p.min(l) {
            acc += &coeffs[k - 1] * &powers[l - k];
        }
        powers.push(acc);
    }
    let full = &powers[lag];
    Ok(DMatrix::from_fn(targets.len(), sources.len(), |i, j| full[(targets[i], sources[j])].clone()))
}
