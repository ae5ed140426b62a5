//! Finite-sample conditional / nuisance IV estimators, OLS, time-series
//! alignment and long-run covariances.

mod align;
mod longrun;
mod ols;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

pub use align::{naive_iv_plim, ts_align, AlignmentMode, AlignmentSpec, CivConditioning};
pub use longrun::{default_bandwidth, longrun_covariance};
pub use ols::{ols_fit, OlsFit};

/// Relative singular-value cutoff for full-rank checks.
pub const RANK_TOL: f64 = 1e-10;
/// Weight matrices above this condition number get a ridge.
pub const WEIGHT_COND_LIMIT: f64 = 1e12;
/// Ridge size relative to `trace / dim`.
pub const WEIGHT_RIDGE: f64 = 1e-10;

/// GMM weight matrix.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum WeightChoice<T: Real> {
    /// Inverse residual instrument covariance.
    #[default]
    Tsls,
    Identity,
    Custom(DMatrix<T>),
    /// Two-step: TSLS fit, then the inverse Bartlett long-run covariance of
    /// the fitted moments.
    Efficient { bandwidth: Option<usize> },
}

impl<T: Real> WeightChoice<T> {
    pub fn name(&self) -> &'static str {
        match self {
            WeightChoice::Tsls => "tsls",
            WeightChoice::Identity => "identity",
            WeightChoice::Custom(_) => "custom",
            WeightChoice::Efficient { .. } => "efficient",
        }
    }
}

/// Observations stored as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct IvProblem<T: Real> {
    pub y: DMatrix<T>,
    pub x: DMatrix<T>,
    /// Nuisance regressors (`0 × n` when absent).
    pub z: DMatrix<T>,
    pub instruments: DMatrix<T>,
    /// Conditioning variables (`0 × n` when absent).
    pub conditioning: DMatrix<T>,
    pub weight: WeightChoice<T>,
    /// Request a plug-in asymptotic covariance with this Bartlett bandwidth
    /// (`Some(None)` picks the default bandwidth).
    pub asymptotic_cov: Option<Option<usize>>,
}

impl<T: Real> IvProblem<T> {
    pub fn new(
        y: DMatrix<T>,
        x: DMatrix<T>,
        z: Option<DMatrix<T>>,
        instruments: DMatrix<T>,
        conditioning: Option<DMatrix<T>>,
    ) -> Result<Self> {
        let n = y.ncols();
        let z = z.unwrap_or_else(|| DMatrix::zeros(0, n));
        let conditioning = conditioning.unwrap_or_else(|| DMatrix::zeros(0, n));
        for (name, m) in [("X", &x), ("Z", &z), ("I", &instruments), ("B", &conditioning)] {
            if m.ncols() != n {
                return Err(Error::dims(format!("{name} has {} columns, Y has {n}", m.ncols())));
            }
        }
        if n == 0 {
            return Err(Error::InsufficientSamples("no observations".into()));
        }
        if y.nrows() == 0 || x.nrows() == 0 || instruments.nrows() == 0 {
            return Err(Error::dims("Y, X and I need at least one row"));
        }
        Ok(Self { y, x, z, instruments, conditioning, weight: WeightChoice::Tsls, asymptotic_cov: None })
    }

    pub fn with_weight(mut self, w: WeightChoice<T>) -> Self {
        self.weight = w;
        self
    }

    pub fn with_asymptotic_cov(mut self, bandwidth: Option<usize>) -> Self {
        self.asymptotic_cov = Some(bandwidth);
        self
    }

    pub fn n(&self) -> usize {
        self.y.ncols()
    }

    pub fn d_x(&self) -> usize {
        self.x.nrows()
    }

    pub fn d_z(&self) -> usize {
        self.z.nrows()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_used: usize,
    /// Singular values of the regressor-instrument cross-covariance, nonincreasing.
    pub singular_values: Vec<f64>,
    pub condition_number: f64,
    pub weight: String,
    pub weight_ridge: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate<T: Real> {
    /// `d_Y × d_X`.
    pub beta_hat: DMatrix<T>,
    /// `d_Y × d_Z`.
    pub alpha_hat: DMatrix<T>,
    pub diagnostics: Diagnostics,
    /// Asymptotic covariance of `√n (vec[β̂, α̂] - vec[β, α])` for `d_Y = 1`.
    pub asymptotic_cov: Option<DMatrix<T>>,
}

/// JSON export record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub beta_hat: Vec<Vec<f64>>,
    pub alpha_hat: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
    pub asymptotic_cov: Option<Vec<Vec<f64>>>,
    pub spec: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
}

pub(crate) fn rows_f64<T: Real>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
}

impl<T: Real> Estimate<T> {
    pub fn to_json(&self, spec: serde_json::Value, seed: Option<u64>) -> EstimateJson {
        EstimateJson {
            beta_hat: rows_f64(&self.beta_hat),
            alpha_hat: rows_f64(&self.alpha_hat),
            diagnostics: self.diagnostics.clone(),
            asymptotic_cov: self.asymptotic_cov.as_ref().map(rows_f64),
            spec,
            seed,
            version: crate::VERSION.to_string(),
        }
    }
}

/// Residuals of the rows of `target` after least-squares regression on the
/// rows of `b` with an intercept. An empty `b` only centers.
pub fn residualize<T: Real>(target: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = target.ncols();
    if b.nrows() > 0 && b.ncols() != n {
        return Err(Error::dims("conditioning set has a different column count"));
    }
    let centered = center_rows(target);
    if b.nrows() == 0 {
        return Ok(centered);
    }
    let bc = center_rows(b);
    let gram = &bc * bc.transpose();
    let coef = &centered * bc.transpose() * linalg::pinv(&gram, T::of(RANK_TOL));
    Ok(centered - coef * bc)
}

fn center_rows<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let mut out = m.clone();
    let n = T::from_usize(m.ncols()).expect("column count fits the scalar");
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / n;
        row.add_scalar_mut(-mean);
    }
    out
}

/// `b̂ = S_YI W S_X̃Iᵀ (S_X̃I W S_X̃Iᵀ)⁻¹` on residualized data, `X̃ = [X; Z]`;
/// `β̂` is the first `d_X` columns.
pub fn civ_fit<T: Real>(p: &IvProblem<T>) -> Result<Estimate<T>> {
    let n = p.n();
    let k = p.d_x() + p.d_z();
    let q = p.instruments.nrows();
    if n < 2 || n <= k {
        return Err(Error::InsufficientSamples(format!("{n} observations for {k} regressors")));
    }
    if q < k {
        return Err(Error::dims(format!("{q} instrument rows for {k} regressors")));
    }
    let xt = linalg::vstack(&[&p.x, &p.z])?;
    let ry = residualize(&p.y, &p.conditioning)?;
    let rx = residualize(&xt, &p.conditioning)?;
    let ri = residualize(&p.instruments, &p.conditioning)?;
    let nf = T::from_usize(n).expect("column count fits the scalar");
    let s_yi = &ry * ri.transpose() / nf;
    let s_xi = &rx * ri.transpose() / nf;
    let s_ii = &ri * ri.transpose() / nf;

    let sv = linalg::singular_values(&s_xi);
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    if sv.len() < k || !(lo > T::of(RANK_TOL) * hi) {
        return Err(Error::RankDeficient { smallest: lo.as_f64(), largest: hi.as_f64() });
    }

    let mut ridge = false;
    let mut tsls_weight = || -> Result<DMatrix<T>> {
        let mut s = s_ii.clone();
        if linalg::condition_number(&s) > T::of(WEIGHT_COND_LIMIT) {
            let shift = T::of(WEIGHT_RIDGE) * s.trace() / T::from_usize(q).expect("fits");
            for j in 0..q {
                s[(j, j)] += shift;
            }
            ridge = true;
        }
        linalg::inverse(&s, "instrument weight")
    };
    let solve = |w: &DMatrix<T>| -> Result<DMatrix<T>> {
        let gram = &s_xi * w * s_xi.transpose();
        Ok(&s_yi * w * s_xi.transpose() * linalg::inverse(&gram, "weighted cross-covariance Gram")?)
    };
    let (w, b) = match &p.weight {
        WeightChoice::Tsls => {
            let w = tsls_weight()?;
            let b = solve(&w)?;
            (w, b)
        }
        WeightChoice::Identity => {
            let w = DMatrix::identity(q, q);
            let b = solve(&w)?;
            (w, b)
        }
        WeightChoice::Custom(w) => {
            if w.shape() != (q, q) {
                return Err(Error::dims("custom weight must be q x q"));
            }
            (w.clone(), solve(w)?)
        }
        WeightChoice::Efficient { bandwidth } => {
            let b0 = solve(&tsls_weight()?)?;
            let k_hat = moment_longrun(&ry, &rx, &ri, &b0, *bandwidth)?;
            let w = linalg::inverse(&k_hat, "efficient weight")?;
            let b = solve(&w)?;
            (w, b)
        }
    };
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite coefficient estimate".into()));
    }
    let asymptotic_cov = match p.asymptotic_cov {
        Some(bw) if p.y.nrows() == 1 => {
            let k_hat = moment_longrun(&ry, &rx, &ri, &b, bw)?;
            let bread = linalg::inverse(&(&s_xi * &w * s_xi.transpose()), "sandwich bread")?;
            let meat = &s_xi * &w * k_hat * &w * s_xi.transpose();
            let mut v = &bread * meat * &bread;
            linalg::symmetrize(&mut v);
            Some(v)
        }
        Some(_) => return Err(Error::Unsupported("asymptotic covariance needs d_Y = 1".into())),
        None => None,
    };
    let d_x = p.d_x();
    Ok(Estimate {
        beta_hat: b.columns(0, d_x).into_owned(),
        alpha_hat: b.columns(d_x, k - d_x).into_owned(),
        diagnostics: Diagnostics {
            n_used: n,
            singular_values: sv.iter().map(|v| v.as_f64()).collect(),
            condition_number: (hi / lo).as_f64(),
            weight: p.weight.name().to_string(),
            weight_ridge: ridge,
        },
        asymptotic_cov,
    })
}

/// Bartlett long-run covariance of `g_t = u_t r_I,t` with `u = r_Y - b r_X̃`
/// (first response row).
fn moment_longrun<T: Real>(
    ry: &DMatrix<T>,
    rx: &DMatrix<T>,
    ri: &DMatrix<T>,
    b: &DMatrix<T>,
    bandwidth: Option<usize>,
) -> Result<DMatrix<T>> {
    let u = ry.row(0) - b.row(0) * rx;
    let mut g = ri.clone();
    for (mut col, &ut) in g.column_iter_mut().zip(u.iter()) {
        col *= ut;
    }
    let n = g.ncols();
    longrun_covariance(&g, bandwidth.unwrap_or_else(|| default_bandwidth(n)).min(n - 1))
}
