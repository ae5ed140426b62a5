//! Identifiability of the nuisance-IV causal effect from process parameters.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::var_model::{Block, InstrumentalVar1};

/// Eigenvalues closer than this are treated as one cluster.
pub const EIGEN_GAP: f64 = 1e-7;
/// Relative singular-value cutoff when counting eigenvectors of a cluster.
const NULLITY_TOL: f64 = 1e-6;

/// `A_I = [α_{X,I}; 0]`, `A_XY = [[α_{X,X}, α_{X,Y}], [β, α_{Y,Y}]]` and `α_{I,I}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBlocks<T: Real> {
    pub a_i: DMatrix<T>,
    pub a_xy: DMatrix<T>,
    pub alpha_ii: DMatrix<T>,
}

impl<T: Real> ReducedBlocks<T> {
    pub fn new(a_i: DMatrix<T>, a_xy: DMatrix<T>, alpha_ii: DMatrix<T>) -> Result<Self> {
        let k = a_xy.nrows();
        if a_xy.ncols() != k || a_i.nrows() != k || alpha_ii.nrows() != a_i.ncols() || !alpha_ii.is_square() {
            return Err(Error::dims("reduced blocks have inconsistent shapes"));
        }
        Ok(Self { a_i, a_xy, alpha_ii })
    }

    pub fn from_process(m: &InstrumentalVar1<T>) -> Result<Self> {
        let l = m.layout();
        if l.d_y != 1 {
            return Err(Error::Unsupported("identifiability is implemented for d_Y = 1".into()));
        }
        let mut xy = l.indices(Block::X);
        xy.extend(l.indices(Block::Y));
        let a = m.a();
        let a_xy = linalg::submatrix(a, &xy, &xy);
        let mut a_i = linalg::submatrix(a, &xy, &l.indices(Block::I));
        a_i.row_mut(l.d_x).fill(T::zero());
        Self::new(a_i, a_xy, m.alpha(Block::I, Block::I))
    }

    pub fn d_x(&self) -> usize {
        self.a_xy.nrows() - 1
    }

    pub fn d_i(&self) -> usize {
        self.a_i.ncols()
    }
}

/// `[A_XY⁰ A_I, A_XY¹ A_I, …, A_XY^{d_X} A_I]`.
pub fn controllability_matrix<T: Real>(b: &ReducedBlocks<T>) -> DMatrix<T> {
    let k = b.a_xy.nrows();
    let d_i = b.d_i();
    let mut out = DMatrix::zeros(k, k * d_i);
    let mut cur = b.a_i.clone();
    for j in 0..k {
        out.view_mut((0, j * d_i), (k, d_i)).copy_from(&cur);
        cur = &b.a_xy * cur;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ControllabilityRank,
    JordanCriterion,
    PopulationRank,
}

/// Eigenvalue cluster of `A_XY`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCluster {
    pub re: f64,
    pub im: f64,
    pub algebraic: usize,
    /// Number of independent eigenvectors (= number of Jordan blocks).
    pub geometric: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanCriterion {
    pub distinct_block_eigenvalues: bool,
    pub w_nonzero: bool,
    /// `|w_k|` for unit left eigenvectors; empty when eigenvalues are not distinct.
    pub w_moduli: Vec<f64>,
    pub clusters: Vec<EigenCluster>,
}

impl JordanCriterion {
    pub fn identifiable(&self) -> bool {
        self.distinct_block_eigenvalues && self.w_nonzero
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiInstrumentCheck {
    pub sufficient: bool,
    /// `ok`, `premise`, `relevance` or `rank`.
    pub reason: String,
    /// Instrument coordinate that satisfies the premise and passes.
    pub witness: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub identifiable: bool,
    pub method: Method,
    pub tol: f64,
    pub controllability_rank: Option<usize>,
    /// Controllability singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    pub smallest_singular_value: f64,
    /// `(re, im)` pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    pub jordan: Option<JordanCriterion>,
    /// The Jordan path was skipped because a cluster is defective.
    pub jordan_delegated: bool,
    /// Rank of the population instrument covariance with `d_X + 1` lags.
    pub population_rank: usize,
    pub multi_instrument: Option<MultiInstrumentCheck>,
}

fn rank_with_sv<T: Real>(m: &DMatrix<T>, tol: f64) -> (usize, Vec<f64>) {
    let sv: Vec<f64> = linalg::singular_values(m).into_iter().map(|v| v.as_f64()).collect();
    let top = sv.first().copied().unwrap_or(0.0);
    let r = if top > 0.0 { sv.iter().filter(|&&s| s > tol * top).count() } else { 0 };
    (r, sv)
}

/// Classify identifiability of `β` for NIV.
///
/// `d_I = 1` uses the controllability rank; `d_I > 1` uses the population
/// instrument covariance rank and adds the sufficient multi-instrument check.
pub fn is_identifiable_niv<T: Real>(m: &InstrumentalVar1<T>, tol: f64) -> Result<IdentifiabilityReport> {
    let blocks = ReducedBlocks::from_process(m)?;
    let k = blocks.d_x() + 1;
    let eigenvalues: Vec<(f64, f64)> =
        linalg::eigenvalues(&blocks.a_xy).iter().map(|z| (z.re.as_f64(), z.im.as_f64())).collect();
    let pop = population_instrument_cov(m, k)?;
    let (population_rank, _) = rank_with_sv(&pop, tol);
    if blocks.d_i() == 0 {
        return Err(Error::dims("no instruments"));
    }
    if blocks.d_i() > 1 {
        let (_, sv) = rank_with_sv(&pop, tol);
        return Ok(IdentifiabilityReport {
            identifiable: population_rank == k,
            method: Method::PopulationRank,
            tol,
            controllability_rank: None,
            smallest_singular_value: sv.get(k - 1).copied().unwrap_or(0.0),
            singular_values: sv,
            eigenvalues,
            jordan: None,
            jordan_delegated: false,
            population_rank,
            multi_instrument: Some(multi_instrument_check(m, tol)),
        });
    }
    let c = controllability_matrix(&blocks);
    let (rank, sv) = rank_with_sv(&c, tol);
    let (jordan, jordan_delegated) = match jordan_criterion(&blocks, tol) {
        Ok(j) => (Some(j), false),
        Err(Error::Unsupported(_)) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(IdentifiabilityReport {
        identifiable: rank == k,
        method: Method::ControllabilityRank,
        tol,
        controllability_rank: Some(rank),
        smallest_singular_value: sv.last().copied().unwrap_or(0.0),
        singular_values: sv,
        eigenvalues,
        jordan,
        jordan_delegated,
        population_rank,
        multi_instrument: None,
    })
}

fn complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|v| Complex::new(v, T::zero()))
}

/// Right singular vectors of the `count` smallest singular values.
fn null_vectors<T: Real>(m: DMatrix<Complex<T>>, count: usize) -> Vec<DMatrix<Complex<T>>> {
    let n = m.ncols();
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap_or(std::cmp::Ordering::Equal));
    order
        .into_iter()
        .take(count)
        .map(|k| DMatrix::from_fn(n, 1, |i, _| v_t[(k, i)].conj()))
        .collect()
}

/// Jordan-form criterion for a scalar instrument: eigenvalues of different
/// Jordan blocks differ, and `w = Q⁻¹ A_I` is nonzero in the last entry of
/// every block.
///
/// Only simple spectra (pairwise gaps above [`EIGEN_GAP`]) are decided
/// through left eigenvectors. A cluster with several eigenvectors has several
/// blocks for one eigenvalue and is decided as not distinct. A defective
/// cluster yields `Error::Unsupported`; callers fall back to the
/// controllability rank.
pub fn jordan_criterion<T: Real>(b: &ReducedBlocks<T>, tol: f64) -> Result<JordanCriterion> {
    if b.d_i() != 1 {
        return Err(Error::Unsupported("the Jordan criterion needs a scalar instrument".into()));
    }
    let n = b.a_xy.nrows();
    let eig = linalg::eigenvalues(&b.a_xy);
    let mut clusters: Vec<Vec<Complex<T>>> = Vec::new();
    for z in eig {
        match clusters.iter_mut().find(|c| nalgebra::ComplexField::modulus(c[0] - z).as_f64() <= EIGEN_GAP) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let scale = linalg::norm_inf(&b.a_xy).as_f64().max(1.0);
    let a_c = complex(&b.a_xy);
    let mut report_clusters = Vec::new();
    let mut distinct = true;
    let mut defective = false;
    for c in &clusters {
        let mean = c.iter().fold(Complex::new(T::zero(), T::zero()), |a, z| a + z)
            / Complex::new(T::from_usize(c.len()).expect("fits"), T::zero());
        let shifted = &a_c - DMatrix::<Complex<T>>::identity(n, n) * mean;
        let sv = shifted.singular_values();
        let geometric = sv.iter().filter(|s| s.as_f64() <= NULLITY_TOL * scale).count().max(1);
        if geometric > 1 {
            distinct = false;
        } else if c.len() > 1 {
            defective = true;
        }
        report_clusters.push(EigenCluster {
            re: mean.re.as_f64(),
            im: mean.im.as_f64(),
            algebraic: c.len(),
            geometric,
        });
    }
    if !distinct {
        return Ok(JordanCriterion { distinct_block_eigenvalues: false, w_nonzero: false, w_moduli: vec![], clusters: report_clusters });
    }
    if defective {
        return Err(Error::Unsupported("defective eigenvalue cluster; use the controllability rank".into()));
    }
    let a_t = complex(&b.a_xy.transpose());
    let a_i = complex(&b.a_i);
    let a_norm = b.a_i.norm().as_f64();
    let mut w_moduli = Vec::with_capacity(n);
    for c in &clusters {
        let shifted = &a_t - DMatrix::<Complex<T>>::identity(n, n) * c[0];
        let left = null_vectors(shifted, 1).remove(0);
        let w = (left.transpose() * &a_i)[(0, 0)];
        w_moduli.push(nalgebra::ComplexField::modulus(w).as_f64() / (left.norm().as_f64() * a_norm.max(f64::MIN_POSITIVE)));
    }
    let w_nonzero = w_moduli.iter().all(|&w| w > tol);
    Ok(JordanCriterion { distinct_block_eigenvalues: true, w_nonzero, w_moduli, clusters: report_clusters })
}

/// `E[(X_{t-1}, Y_{t-1}) I_{t-1-j}ᵀ]` for `j = 1..=m`, side by side.
///
/// A scalar instrument uses the closed form
/// `v_I [A_XY^{j-1} B⁻¹ + Σ_{k<j-1} α_{I,I}^{j-1-k} A_XY^k] A_I` with
/// `B = I - α_{I,I} A_XY`; otherwise the stationary autocovariances are used.
pub fn population_instrument_cov<T: Real>(m: &InstrumentalVar1<T>, lags: usize) -> Result<DMatrix<T>> {
    if m.layout().d_i == 1 {
        population_instrument_cov_formula(m, lags)
    } else {
        population_instrument_cov_autocov(m, lags)
    }
}

/// Closed-form path, scalar instrument only.
pub fn population_instrument_cov_formula<T: Real>(m: &InstrumentalVar1<T>, lags: usize) -> Result<DMatrix<T>> {
    let blocks = ReducedBlocks::from_process(m)?;
    if blocks.d_i() != 1 {
        return Err(Error::Unsupported("closed form needs a scalar instrument".into()));
    }
    let l = m.layout();
    let lag0 = m.params().stationary_covariance()?.lag0;
    let i0 = l.range(Block::I).start;
    let v_i = lag0[(i0, i0)];
    let alpha = blocks.alpha_ii[(0, 0)];
    let k = blocks.a_xy.nrows();
    let b_inv = linalg::inverse(&(DMatrix::identity(k, k) - &blocks.a_xy * alpha), "I - alpha_II A_XY")?;
    let mut out = DMatrix::zeros(k, lags);
    let mut powers = vec![DMatrix::identity(k, k)];
    for j in 1..=lags {
        let e = j - 1;
        while powers.len() <= e {
            let next = &blocks.a_xy * powers.last().expect("nonempty");
            powers.push(next);
        }
        let mut bracket = &powers[e] * &b_inv;
        for (kk, p) in powers.iter().enumerate().take(e) {
            bracket += p * alpha.powi((e - kk) as i32);
        }
        out.column_mut(j - 1).copy_from(&(bracket * &blocks.a_i * v_i).column(0));
    }
    Ok(out)
}

/// Autocovariance path, any instrument dimension.
pub fn population_instrument_cov_autocov<T: Real>(m: &InstrumentalVar1<T>, lags: usize) -> Result<DMatrix<T>> {
    let l = m.layout();
    let mut xy = l.indices(Block::X);
    xy.extend(l.indices(Block::Y));
    let ii = l.indices(Block::I);
    let covs = m.params().autocovariances(lags)?;
    let mut out = DMatrix::zeros(xy.len(), lags * ii.len());
    for j in 1..=lags {
        let block = linalg::submatrix(&covs[j], &xy, &ii);
        out.view_mut((0, (j - 1) * ii.len()), (xy.len(), ii.len())).copy_from(&block);
    }
    Ok(out)
}

/// Sufficient condition for several instruments: some instrument coordinate
/// evolves independently of the others and alone identifies `β`.
pub fn multi_instrument_check<T: Real>(m: &InstrumentalVar1<T>, tol: f64) -> MultiInstrumentCheck {
    let Ok(blocks) = ReducedBlocks::from_process(m) else {
        return MultiInstrumentCheck { sufficient: false, reason: "unsupported".into(), witness: None };
    };
    let d_i = blocks.d_i();
    let a = &blocks.alpha_ii;
    let independent: Vec<usize> =
        (0..d_i).filter(|&j| (0..d_i).all(|k| k == j || (a[(j, k)] == T::zero() && a[(k, j)] == T::zero()))).collect();
    if independent.is_empty() {
        return MultiInstrumentCheck { sufficient: false, reason: "premise".into(), witness: None };
    }
    let relevant: Vec<usize> = independent.into_iter().filter(|&j| blocks.a_i.column(j).iter().any(|v| *v != T::zero())).collect();
    if relevant.is_empty() {
        return MultiInstrumentCheck { sufficient: false, reason: "relevance".into(), witness: None };
    }
    let k = blocks.a_xy.nrows();
    for j in relevant {
        let reduced = ReducedBlocks {
            a_i: blocks.a_i.columns(j, 1).into_owned(),
            a_xy: blocks.a_xy.clone(),
            alpha_ii: a.view((j, j), (1, 1)).into_owned(),
        };
        let (r, _) = rank_with_sv(&controllability_matrix(&reduced), tol);
        if r == k {
            return MultiInstrumentCheck { sufficient: true, reason: "ok".into(), witness: Some(j) };
        }
    }
    MultiInstrumentCheck { sufficient: false, reason: "rank".into(), witness: None }
}
