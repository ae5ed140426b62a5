//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> T {
    let mut radius = T::zero();
    for z in eigenvalues(m) {
        let r = z.modulus();
        if !r.is_finite() {
            return r;
        }
        radius = radius.max(r);
    }
    radius
}

/// Eigenvalues of a real square matrix (complex in general).
///
/// The unbounded Schur iteration can cycle on exactly structured inputs, so
/// it runs with an iteration cap and is retried on orthogonally similar
/// matrices, then on a relative `1e-13` perturbation; NaN if all fail.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Vec<Complex<T>> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let cap = 200 * n + 1000;
    let attempt = |a: DMatrix<T>| Schur::try_new(a, T::default_epsilon(), cap).map(|s| s.complex_eigenvalues());
    if let Some(ev) = attempt(m.clone()) {
        return ev.iter().copied().collect();
    }
    for k in 1..=8 {
        let h = householder::<T>(n, k);
        if let Some(ev) = attempt(&h * m * &h) {
            return ev.iter().copied().collect();
        }
    }
    let scale = max_abs(m).max(T::one()) * T::of(1e-13);
    let bumped = DMatrix::from_fn(n, n, |i, j| m[(i, j)] + scale * T::of(((i * n + j) % 7) as f64 - 3.0));
    attempt(bumped).map(|ev| ev.iter().copied().collect()).unwrap_or_else(|| vec![Complex::new(T::of(f64::NAN), T::zero()); n])
}

/// Symmetric orthogonal reflector `I - 2vvᵀ` with a fixed dense direction.
fn householder<T: Real>(n: usize, k: usize) -> DMatrix<T> {
    let v = DVector::from_fn(n, |i, _| T::of(1.0 + ((i + 1) * (k + 2) % 11) as f64 / 3.0));
    let v = &v / v.norm();
    DMatrix::identity(n, n) - (&v * v.transpose()) * T::of(2.0)
}

/// Singular values in nonincreasing order.
pub fn singular_values<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<T> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Numerical rank with singular-value cutoff `rel_tol * largest`.
pub fn rank<T: Real>(m: &DMatrix<T>, rel_tol: T) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        None => 0,
        Some(&top) if top <= T::zero() => 0,
        Some(&top) => sv.iter().filter(|&&s| s > rel_tol * top).count(),
    }
}

/// Moore–Penrose pseudo-inverse with relative cutoff.
pub fn pinv<T: Real>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let cutoff = rel_tol * top;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > T::zero() {
            let vk = v_t.row(k).transpose();
            let uk = u.column(k);
            out += (vk * uk.transpose()) / s;
        }
    }
    out
}

/// Dense inverse via LU; errors when singular.
pub fn inverse<T: Real>(m: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(format!("{what}: inverse of non-square matrix")));
    }
    m.clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(what.to_string()))
}

/// Condition number in the 2-norm (infinite when singular).
pub fn condition_number<T: Real>(m: &DMatrix<T>) -> T {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        (Some(_), Some(_)) => T::max_value().unwrap_or_else(T::one),
        _ => T::zero(),
    }
}

/// `m^k` by repeated multiplication.
pub fn matrix_power<T: Real>(m: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = m * &out;
    }
    out
}

/// Entry-wise maximum absolute value.
pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// Infinity norm (max absolute row sum).
pub fn norm_inf<T: Real>(m: &DMatrix<T>) -> T {
    m.row_iter()
        .map(|r| r.iter().fold(T::zero(), |a, v| a + v.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Rows `rows` and columns `cols` of `m`.
pub fn submatrix<T: Real>(m: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Stack matrices with equal column counts on top of each other.
pub fn vstack<T: Real>(blocks: &[&DMatrix<T>]) -> Result<DMatrix<T>> {
    let ncols = blocks.iter().map(|b| b.ncols()).find(|&c| c > 0).unwrap_or(0);
    let mut rows = 0;
    for b in blocks {
        if b.nrows() > 0 && b.ncols() != ncols {
            return Err(Error::dims("vstack: column counts differ"));
        }
        rows += b.nrows();
    }
    let mut out = DMatrix::zeros(rows, ncols);
    let mut r0 = 0;
    for b in blocks {
        if b.nrows() == 0 {
            continue;
        }
        out.rows_mut(r0, b.nrows()).copy_from(b);
        r0 += b.nrows();
    }
    Ok(out)
}

/// Symmetrize in place: `(m + mᵀ) / 2`.
pub fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half = T::of(0.5);
    let t = m.transpose();
    *m += t;
    *m *= half;
}

/// Lower Cholesky factor of a symmetric positive (semi)definite matrix.
///
/// A tiny diagonal jitter is tried when the plain factorization fails, which
/// only happens for numerically singular covariances.
pub fn cholesky_lower<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    let scale = m.diagonal().iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let jitter = scale * T::EPS * T::of(16.0);
    let mut shifted = m.clone();
    for i in 0..m.nrows() {
        shifted[(i, i)] += jitter;
    }
    shifted
        .cholesky()
        .map(|ch| ch.l())
        .ok_or_else(|| Error::Numerical("covariance is not positive semidefinite".into()))
}

/// Column vector from a slice of f64.
pub fn dvec<T: Real>(v: &[f64]) -> DVector<T> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| T::of(x)))
}

/// Row-major dense matrix from f64 data.
pub fn dmat<T: Real>(rows: usize, cols: usize, row_major: &[f64]) -> DMatrix<T> {
    assert_eq!(rows * cols, row_major.len(), "dmat: data length");
    DMatrix::from_row_iterator(rows, cols, row_major.iter().map(|&x| T::of(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_nilpotent_matrix_terminates() {
        let m: DMatrix<f64> = dmat(4, 4, &[0., 0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0.]);
        assert!(spectral_radius(&m) < 1e-6);
        let j: DMatrix<f64> = dmat(3, 3, &[0.5, 1., 0., 0., 0.5, 1., 0., 0., 0.5]);
        assert!((spectral_radius(&j) - 0.5).abs() < 1e-4);
    }

    #[test]
    fn pinv_of_rank_one() {
        let m: DMatrix<f64> = dmat(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let p = pinv(&m, 1e-12);
        let back = &m * &p * &m;
        assert!(max_abs(&(back - &m)) < 1e-12);
        assert_eq!(rank(&m, 1e-10), 1);
    }

    #[test]
    fn spectral_radius_of_rotation() {
        let m: DMatrix<f64> = dmat(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&m) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vstack_skips_empty_blocks() {
        let a: DMatrix<f64> = dmat(1, 3, &[1.0, 2.0, 3.0]);
        let e: DMatrix<f64> = DMatrix::zeros(0, 0);
        let s = vstack(&[&a, &e, &a]).unwrap();
        assert_eq!(s.shape(), (2, 3));
    }
}
