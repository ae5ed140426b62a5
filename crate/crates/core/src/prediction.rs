//! Linear prediction of `Y_{t+1}` under `do(X_t := x)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{ols_fit, rows_f64};
use crate::linalg;
use crate::scalar::Real;
use crate::var_model::{Block, TimeSeriesSample};

/// `Ŷ_{t+1} = β x + Σ_{k=1}^m α_{Y,X}^k X_{t-k} + Σ_{j=0}^l α_{Y,Y}^j Y_{t-j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterventionPredictor<T: Real> {
    pub beta: DMatrix<T>,
    pub m: usize,
    pub l: usize,
    /// `alpha_yx[k - 1]` multiplies `X_{t-k}`.
    pub alpha_yx: Vec<DMatrix<T>>,
    /// `alpha_yy[j]` multiplies `Y_{t-j}`.
    pub alpha_yy: Vec<DMatrix<T>>,
    pub rank_deficient: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorJson {
    pub beta: Vec<Vec<f64>>,
    pub m: usize,
    pub l: usize,
    pub alpha_yx: Vec<Vec<Vec<f64>>>,
    pub alpha_yy: Vec<Vec<Vec<f64>>>,
}

/// Lag design over response times `s = max(m, l) + 1 ..= T - 1`:
/// rows `X_{s-1}, …, X_{s-m}, Y_s, …, Y_{s-l}`, plus `X_s` first when requested.
fn design<T: Real>(sample: &TimeSeriesSample<T>, m: usize, l: usize, with_current_x: bool) -> Result<(DMatrix<T>, usize)> {
    let len = sample.len();
    let s0 = m.max(l) + 1;
    if len <= s0 {
        return Err(Error::InsufficientSamples(format!("T = {len} must exceed max(m, l) + 1 = {s0}")));
    }
    let s1 = len - 1;
    let mut blocks = Vec::new();
    if with_current_x {
        blocks.push(sample.block_window(Block::X, s0, s1));
    }
    for k in 1..=m {
        blocks.push(sample.block_window(Block::X, s0 - k, s1 - k));
    }
    for j in 0..=l {
        blocks.push(sample.block_window(Block::Y, s0 - j, s1 - j));
    }
    let refs: Vec<&DMatrix<T>> = blocks.iter().collect();
    Ok((linalg::vstack(&refs)?, s0))
}

fn split<T: Real>(beta: DMatrix<T>, coef: &DMatrix<T>, offset: usize, d_x: usize, d_y: usize, m: usize, l: usize, rank_deficient: bool) -> InterventionPredictor<T> {
    let alpha_yx = (0..m).map(|k| coef.columns(offset + k * d_x, d_x).into_owned()).collect();
    let y0 = offset + m * d_x;
    let alpha_yy = (0..=l).map(|j| coef.columns(y0 + j * d_y, d_y).into_owned()).collect();
    InterventionPredictor { beta, m, l, alpha_yx, alpha_yy, rank_deficient }
}

/// Regress `r_s = Y_{s+1} - β X_s` on `X_{s-1..s-m}` and `Y_{s..s-l}`.
pub fn fit_intervention_predictor<T: Real>(
    beta: &DMatrix<T>,
    sample: &TimeSeriesSample<T>,
    m: usize,
    l: usize,
) -> Result<InterventionPredictor<T>> {
    let layout = sample.layout();
    if beta.shape() != (layout.d_y, layout.d_x) {
        return Err(Error::dims("beta must be d_Y x d_X"));
    }
    let (z, s0) = design(sample, m, l, false)?;
    let len = sample.len();
    let resp = sample.block_window(Block::Y, s0 + 1, len) - beta * sample.block_window(Block::X, s0, len - 1);
    let fit = ols_fit(&resp, &z)?;
    Ok(split(beta.clone(), &fit.coef, 0, layout.d_x, layout.d_y, m, l, fit.rank_deficient))
}

/// Baseline: `Y_{s+1}` regressed on `X_s`, the same lags, with the `X_s`
/// coefficient used as the effect of the intervention.
pub fn fit_ols_predictor<T: Real>(sample: &TimeSeriesSample<T>, m: usize, l: usize) -> Result<InterventionPredictor<T>> {
    let layout = sample.layout();
    let (z, s0) = design(sample, m, l, true)?;
    let resp = sample.block_window(Block::Y, s0 + 1, sample.len());
    let fit = ols_fit(&resp, &z)?;
    let beta = fit.coef.columns(0, layout.d_x).into_owned();
    Ok(split(beta, &fit.coef, layout.d_x, layout.d_x, layout.d_y, m, l, fit.rank_deficient))
}

/// `x_hist` holds `X_{t-m}, …, X_{t-1}` and `y_hist` holds `Y_{t-l}, …, Y_t`
/// as columns in time order.
pub fn predict_under_intervention<T: Real>(
    p: &InterventionPredictor<T>,
    x_hist: &DMatrix<T>,
    y_hist: &DMatrix<T>,
    x: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    if x_hist.ncols() != p.m || y_hist.ncols() != p.l + 1 {
        return Err(Error::dims(format!("history must have {} X and {} Y columns", p.m, p.l + 1)));
    }
    if x.shape() != (p.beta.ncols(), 1) || x_hist.nrows() != p.beta.ncols() || y_hist.nrows() != p.beta.nrows() {
        return Err(Error::dims("history or intervention value has the wrong row count"));
    }
    let mut out = &p.beta * x;
    for k in 1..=p.m {
        out += &p.alpha_yx[k - 1] * x_hist.column(p.m - k);
    }
    for j in 0..=p.l {
        out += &p.alpha_yy[j] * y_hist.column(p.l - j);
    }
    Ok(out)
}

/// Prediction of `Y_{t+1}` using the history in `sample` up to time `t`.
pub fn predict_from_sample<T: Real>(
    p: &InterventionPredictor<T>,
    sample: &TimeSeriesSample<T>,
    t: usize,
    x: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    if t <= p.m.max(p.l) || t > sample.len() {
        return Err(Error::InsufficientSamples(format!("time {t} lacks the required history")));
    }
    let xh = if p.m == 0 {
        DMatrix::zeros(p.beta.ncols(), 0)
    } else {
        sample.block_window(Block::X, t - p.m, t - 1)
    };
    let yh = sample.block_window(Block::Y, t - p.l, t);
    predict_under_intervention(p, &xh, &yh, x)
}

impl<T: Real> InterventionPredictor<T> {
    pub fn to_json(&self) -> PredictorJson {
        PredictorJson {
            beta: rows_f64(&self.beta),
            m: self.m,
            l: self.l,
            alpha_yx: self.alpha_yx.iter().map(rows_f64).collect(),
            alpha_yy: self.alpha_yy.iter().map(rows_f64).collect(),
        }
    }
}
