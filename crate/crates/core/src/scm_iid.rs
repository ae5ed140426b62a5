//! Linear structural causal models with i.i.d. samples: exact moments,
//! population IV moments and asymptotic variances.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::linalg::{self, submatrix};
use crate::scalar::Real;

/// Variable roles; entries index the SCM variables.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Roles {
    #[serde(rename = "I", default)]
    pub i: Vec<usize>,
    #[serde(rename = "X", default)]
    pub x: Vec<usize>,
    #[serde(rename = "Z", default)]
    pub z: Vec<usize>,
    #[serde(rename = "B", default)]
    pub b: Vec<usize>,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "H", default)]
    pub h: Vec<usize>,
}

/// `S = A S + ε`, `ε ~ N(0, diag(Γ))`; row `i` of `A` holds the parents of `S_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearScm<T: Real> {
    a: DMatrix<T>,
    noise: DVector<T>,
    roles: Roles,
    /// `(I - A)⁻¹`.
    mixing: DMatrix<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Gamma_diag")]
    pub gamma_diag: Vec<f64>,
    pub roles: Roles,
}

impl<T: Real> LinearScm<T> {
    pub fn new(a: DMatrix<T>, noise_diag: DVector<T>, roles: Roles) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || noise_diag.len() != n {
            return Err(Error::dims("A must be n x n and Gamma_diag of length n"));
        }
        if noise_diag.iter().any(|g| !g.is_finite() || *g <= T::zero()) {
            return Err(Error::InvalidNoise);
        }
        let mut used = roles.i.iter().chain(&roles.x).chain(&roles.z).chain(&roles.b).chain(&roles.h);
        if roles.y >= n || used.any(|&v| v >= n) {
            return Err(Error::dims("role index out of range"));
        }
        if !Self::graph_of(&a).is_acyclic() {
            return Err(Error::Graph("structural graph has a cycle".into()));
        }
        let mixing = linalg::inverse(&(DMatrix::identity(n, n) - &a), "I - A")?;
        Ok(Self { a, noise: noise_diag, roles, mixing })
    }

    fn graph_of(a: &DMatrix<T>) -> MixedGraph {
        let names: Vec<String> = (0..a.nrows()).map(|k| format!("V{k}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut g = MixedGraph::with_names(&refs);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if i != j && a[(i, j)] != T::zero() {
                    g.add_directed(j, i);
                }
            }
        }
        g
    }

    /// Directed graph `j → i` for every nonzero `A[i, j]`.
    pub fn graph(&self) -> MixedGraph {
        Self::graph_of(&self.a)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn noise_diag(&self) -> &DVector<T> {
        &self.noise
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    pub fn with_roles(&self, roles: Roles) -> Result<Self> {
        Self::new(self.a.clone(), self.noise.clone(), roles)
    }

    pub fn with_noise(&self, noise_diag: DVector<T>) -> Result<Self> {
        Self::new(self.a.clone(), noise_diag, self.roles.clone())
    }

    /// Structural coefficients of `Y` on `cols`.
    pub fn coefficients(&self, cols: &[usize]) -> DMatrix<T> {
        submatrix(&self.a, &[self.roles.y], cols)
    }

    /// `n` i.i.d. draws as columns.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DMatrix<T> {
        let sd: Vec<T> = self.noise.iter().map(|g| g.sqrt()).collect();
        let eps = DMatrix::from_fn(self.n(), n, |i, _| sd[i] * T::standard_normal(rng));
        &self.mixing * eps
    }

    pub fn to_file(&self) -> ScmFile {
        ScmFile {
            a: self.a.row_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
            gamma_diag: self.noise.iter().map(|v| v.as_f64()).collect(),
            roles: self.roles.clone(),
        }
    }

    pub fn from_file(f: &ScmFile) -> Result<Self> {
        let n = f.a.len();
        if f.a.iter().any(|r| r.len() != n) {
            return Err(Error::Parse("A must be square".into()));
        }
        let a = DMatrix::from_fn(n, n, |i, j| T::of(f.a[i][j]));
        let g = DVector::from_iterator(f.gamma_diag.len(), f.gamma_diag.iter().map(|&v| T::of(v)));
        Self::new(a, g, f.roles.clone())
    }
}

/// `(I - A)⁻¹ Γ (I - A)⁻ᵀ`.
pub fn scm_covariance<T: Real>(m: &LinearScm<T>) -> DMatrix<T> {
    let mut s = &m.mixing * DMatrix::from_diagonal(&m.noise) * m.mixing.transpose();
    linalg::symmetrize(&mut s);
    s
}

/// `cov(U, V | B) = Σ_UV - Σ_UB Σ_BB⁻¹ Σ_BV` for a Gaussian joint covariance.
pub fn conditional_covariance<T: Real>(cov: &DMatrix<T>, u: &[usize], v: &[usize], b: &[usize]) -> Result<DMatrix<T>> {
    let uv = submatrix(cov, u, v);
    if b.is_empty() {
        return Ok(uv);
    }
    let bb_inv = linalg::inverse(&submatrix(cov, b, b), "conditioning covariance")?;
    Ok(uv - submatrix(cov, u, b) * bb_inv * submatrix(cov, b, v))
}

/// `E[cov(Y - coef·R, I | B)]` as a `1 × |I|` row, where `R` are the regressors.
pub fn civ_population_moment<T: Real>(
    m: &LinearScm<T>,
    coef: &DMatrix<T>,
    instruments: &[usize],
    regressors: &[usize],
    conditioning: &[usize],
) -> Result<DMatrix<T>> {
    if coef.nrows() != 1 || coef.ncols() != regressors.len() {
        return Err(Error::dims("coefficient row must match the regressors"));
    }
    let cov = scm_covariance(m);
    let y = [m.roles.y];
    let yi = conditional_covariance(&cov, &y, instruments, conditioning)?;
    let xi = conditional_covariance(&cov, regressors, instruments, conditioning)?;
    Ok(yi - coef * xi)
}

/// The NIV moment `E[(Y - β X - α Z) Iᵀ]`; `coef` is `[β, α]`.
pub fn niv_population_moment<T: Real>(m: &LinearScm<T>, coef: &DMatrix<T>) -> Result<DMatrix<T>> {
    let r = m.roles();
    let regs: Vec<usize> = r.x.iter().chain(&r.z).copied().collect();
    civ_population_moment(m, coef, &r.i, &regs, &[])
}

/// Root of the population moment with weight `cov(I | B)⁻¹`.
pub fn population_iv_coefficients<T: Real>(
    m: &LinearScm<T>,
    instruments: &[usize],
    regressors: &[usize],
    conditioning: &[usize],
) -> Result<DMatrix<T>> {
    let cov = scm_covariance(m);
    let y = [m.roles.y];
    let yi = conditional_covariance(&cov, &y, instruments, conditioning)?;
    let xi = conditional_covariance(&cov, regressors, instruments, conditioning)?;
    let w = linalg::inverse(&conditional_covariance(&cov, instruments, instruments, conditioning)?, "instrument covariance")?;
    let gram = &xi * &w * xi.transpose();
    require_full_rank(&xi)?;
    Ok(yi * &w * xi.transpose() * linalg::inverse(&gram, "regressor-instrument Gram")?)
}

fn require_full_rank<T: Real>(c: &DMatrix<T>) -> Result<()> {
    let sv = linalg::singular_values(c);
    let (hi, lo) = (sv.first().copied().unwrap_or(T::zero()), sv.last().copied().unwrap_or(T::zero()));
    if sv.len() < c.nrows() || lo <= T::of(1e-10) * hi {
        return Err(Error::RankDeficient { smallest: lo.as_f64(), largest: hi.as_f64() });
    }
    Ok(())
}

/// `(C K⁻¹ Cᵀ)⁻¹` with `C = cov(R, I | B)` and
/// `K = var(Y - coef·R | B) · cov(I | B)`, `coef` the structural coefficients.
fn gmm_variance<T: Real>(
    m: &LinearScm<T>,
    instruments: &[usize],
    regressors: &[usize],
    conditioning: &[usize],
) -> Result<DMatrix<T>> {
    let cov = scm_covariance(m);
    let c = conditional_covariance(&cov, regressors, instruments, conditioning)?;
    require_full_rank(&c)?;
    let coef = m.coefficients(regressors);
    // residual u = e_Y - coef·e_R as a linear functional of S
    let mut u = DVector::zeros(m.n());
    u[m.roles.y] = T::one();
    for (k, &r) in regressors.iter().enumerate() {
        u[r] -= coef[(0, k)];
    }
    let mut ext = DMatrix::zeros(m.n() + 1, m.n() + 1);
    ext.view_mut((0, 0), (m.n(), m.n())).copy_from(&cov);
    let cu = &cov * &u;
    ext.view_mut((0, m.n()), (m.n(), 1)).copy_from(&cu);
    ext.view_mut((m.n(), 0), (1, m.n())).copy_from(&cu.transpose());
    ext[(m.n(), m.n())] = u.dot(&cu);
    let sigma2 = conditional_covariance(&ext, &[m.n()], &[m.n()], conditioning)?[(0, 0)];
    let ii = conditional_covariance(&cov, instruments, instruments, conditioning)?;
    let k_inv = linalg::inverse(&(ii * sigma2), "K")?;
    linalg::inverse(&(&c * k_inv * c.transpose()), "C K^-1 C^T")
}

/// `Σ1` for `niv(X → Y)` with instruments `I` and nuisance `Z`; full
/// `(d_X + d_Z)` square matrix, the leading `d_X` block belongs to `X`.
pub fn asymptotic_variance_niv<T: Real>(m: &LinearScm<T>) -> Result<DMatrix<T>> {
    let r = m.roles();
    let regs: Vec<usize> = r.x.iter().chain(&r.z).copied().collect();
    gmm_variance(m, &r.i, &regs, &[])
}

/// `Σ2` for `civ(X → Y | I given B)`.
pub fn asymptotic_variance_civ<T: Real>(m: &LinearScm<T>) -> Result<DMatrix<T>> {
    let r = m.roles();
    gmm_variance(m, &r.i, &r.x, &r.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dmat, max_abs};

    fn chain() -> LinearScm<f64> {
        let a = dmat(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        LinearScm::new(a, DVector::repeat(2, 1.0), Roles { x: vec![0], y: 1, ..Roles::default() }).unwrap()
    }

    #[test]
    fn covariance_of_empty_model_is_noise() {
        let m = LinearScm::new(DMatrix::<f64>::zeros(3, 3), DVector::from_vec(vec![1.0, 2.0, 3.0]), Roles::default()).unwrap();
        assert_eq!(scm_covariance(&m), DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])));
    }

    #[test]
    fn chain_covariance_by_hand() {
        let c = scm_covariance(&chain());
        assert!((c[(0, 1)] - 1.0).abs() < 1e-15 && (c[(1, 1)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cycles_are_rejected() {
        let a = dmat(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert!(LinearScm::<f64>::new(a, DVector::repeat(2, 1.0), Roles::default()).is_err());
    }

    #[test]
    fn conditioning_on_a_common_cause_removes_dependence() {
        // B -> U, B -> V
        let a = dmat(3, 3, &[0.0, 0.0, 0.0, 0.7, 0.0, 0.0, -0.4, 0.0, 0.0]);
        let m = LinearScm::<f64>::new(a, DVector::repeat(3, 1.0), Roles::default()).unwrap();
        let c = conditional_covariance(&scm_covariance(&m), &[1], &[2], &[0]).unwrap();
        assert!(c[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn unconditional_moment_is_plain_cross_moment() {
        // I -> X -> Y
        let a = dmat(3, 3, &[0.0, 0.0, 0.0, 0.8, 0.0, 0.0, 0.0, 1.5, 0.0]);
        let m = LinearScm::<f64>::new(a, DVector::repeat(3, 1.0), Roles { i: vec![0], x: vec![1], y: 2, ..Roles::default() }).unwrap();
        let at_truth = civ_population_moment(&m, &dmat(1, 1, &[1.5]), &[0], &[1], &[]).unwrap();
        assert!(max_abs(&at_truth) < 1e-14);
        let off = civ_population_moment(&m, &dmat(1, 1, &[2.5]), &[0], &[1], &[]).unwrap();
        // cov(X, I) = 0.8
        assert!((off[(0, 0)] + 0.8).abs() < 1e-14);
    }

    #[test]
    fn file_round_trip() {
        let m = chain();
        let text = serde_json::to_string(&m.to_file()).unwrap();
        assert!(text.contains("\"Gamma_diag\"") && text.contains("\"Y\":1"));
        let back: LinearScm<f64> = LinearScm::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
