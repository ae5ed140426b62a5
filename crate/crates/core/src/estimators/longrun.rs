use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// `⌊4 (n / 100)^{2/9}⌋`.
pub fn default_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett estimate `Σ_{|h| ≤ L} (1 - |h| / (L + 1)) Γ̂_h` of the long-run
/// covariance of the columns of `g`; `Γ̂_h` uses centered data and divides by `n`.
pub fn longrun_covariance<T: Real>(g: &DMatrix<T>, bandwidth: usize) -> Result<DMatrix<T>> {
    let n = g.ncols();
    if bandwidth >= n {
        return Err(Error::InsufficientSamples(format!("bandwidth {bandwidth} needs more than {n} observations")));
    }
    let nf = T::from_usize(n).expect("fits");
    let mean = g.column_mean();
    let mut c = g.clone();
    for mut col in c.column_iter_mut() {
        col -= &mean;
    }
    let mut out = &c * c.transpose() / nf;
    for h in 1..=bandwidth {
        let w = T::one() - T::from_usize(h).expect("fits") / T::from_usize(bandwidth + 1).expect("fits");
        let lead = c.columns(h, n - h);
        let lag = c.columns(0, n - h);
        let gamma = lead * lag.transpose() / nf;
        out += (&gamma + gamma.transpose()) * w;
    }
    linalg::symmetrize(&mut out);
    Ok(out)
}
