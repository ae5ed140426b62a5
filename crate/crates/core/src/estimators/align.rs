use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::IvProblem;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::var_model::{Block, InstrumentalVar1, TimeSeriesSample};

/// Conditioning set of the time-series CIV estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CivConditioning {
    /// `{I_{t-3}}`.
    Instrument,
    /// `{I_{t-3}, X_{t-2}, Y_{t-1}}`.
    InstrumentAndPast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlignmentMode {
    /// `Y_t` on `X_{t-1}` with instrument `I_{t-2}` given the conditioning set.
    Civ { conditioning: CivConditioning },
    /// `Y_t` on `[X_{t-1}; Y_{t-1}]` with instruments `I_{t-2}, …, I_{t-lags-1}`.
    Niv { lags: usize },
    /// `Y_t` on `X_{t-1}` with instrument `I_{t-2}` and nothing else.
    NaiveIv,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentSpec {
    #[serde(flatten)]
    pub mode: AlignmentMode,
    /// Coordinates of the `I` block used as instruments; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruments: Option<Vec<usize>>,
}

impl AlignmentSpec {
    pub fn civ(conditioning: CivConditioning) -> Self {
        Self { mode: AlignmentMode::Civ { conditioning }, instruments: None }
    }

    pub fn niv(lags: usize) -> Self {
        Self { mode: AlignmentMode::Niv { lags }, instruments: None }
    }

    pub fn naive() -> Self {
        Self { mode: AlignmentMode::NaiveIv, instruments: None }
    }

    pub fn with_instruments(mut self, coords: Vec<usize>) -> Self {
        self.instruments = Some(coords);
        self
    }

    /// Deepest lag used.
    pub fn depth(&self) -> usize {
        match self.mode {
            AlignmentMode::Civ { .. } => 3,
            AlignmentMode::Niv { lags } => lags + 1,
            AlignmentMode::NaiveIv => 2,
        }
    }

    /// First response time `s` (one-based).
    pub fn start(&self) -> usize {
        self.depth() + 1
    }
}

/// Rows `coords` of `block` at times `s - lag ..= len - lag`.
fn lagged<T: Real>(sample: &TimeSeriesSample<T>, block: Block, coords: Option<&[usize]>, lag: usize, s: usize) -> DMatrix<T> {
    let all = sample.block_window(block, s - lag, sample.len() - lag);
    match coords {
        None => all,
        Some(c) => all.select_rows(c),
    }
}

/// Build the regression problem of the given estimator; columns correspond to
/// response times `s..=T`.
pub fn ts_align<T: Real>(sample: &TimeSeriesSample<T>, spec: &AlignmentSpec) -> Result<IvProblem<T>> {
    let s = spec.start();
    if sample.len() < s {
        return Err(Error::InsufficientSamples(format!("T = {} but the deepest lag needs T >= {s}", sample.len())));
    }
    if let AlignmentMode::Niv { lags: 0 } = spec.mode {
        return Err(Error::InvalidLag("NIV needs at least one instrument lag".into()));
    }
    let layout = sample.layout();
    if let Some(c) = &spec.instruments {
        if c.is_empty() || c.iter().any(|&k| k >= layout.d_i) {
            return Err(Error::dims("instrument coordinate outside the I block"));
        }
    }
    let coords = spec.instruments.as_deref();
    let y = lagged(sample, Block::Y, None, 0, s);
    let x = lagged(sample, Block::X, None, 1, s);
    match spec.mode {
        AlignmentMode::Civ { conditioning } => {
            let i = lagged(sample, Block::I, coords, 2, s);
            let i3 = lagged(sample, Block::I, coords, 3, s);
            let b = match conditioning {
                CivConditioning::Instrument => i3,
                CivConditioning::InstrumentAndPast => {
                    let x2 = lagged(sample, Block::X, None, 2, s);
                    let y1 = lagged(sample, Block::Y, None, 1, s);
                    linalg::vstack(&[&i3, &x2, &y1])?
                }
            };
            IvProblem::new(y, x, None, i, Some(b))
        }
        AlignmentMode::Niv { lags } => {
            let blocks: Vec<DMatrix<T>> = (2..=lags + 1).map(|k| lagged(sample, Block::I, coords, k, s)).collect();
            let refs: Vec<&DMatrix<T>> = blocks.iter().collect();
            let i = linalg::vstack(&refs)?;
            let z = lagged(sample, Block::Y, None, 1, s);
            IvProblem::new(y, x, Some(z), i, None)
        }
        AlignmentMode::NaiveIv => {
            let i = lagged(sample, Block::I, coords, 2, s);
            IvProblem::new(y, x, None, i, None)
        }
    }
}

/// Probability limit `β / (1 - α_{I,I} α_{Y,Y})` of the naive IV estimator
/// for a process with scalar blocks.
pub fn naive_iv_plim<T: Real>(m: &InstrumentalVar1<T>) -> Result<DMatrix<T>> {
    let l = m.layout();
    if (l.d_i, l.d_h, l.d_x, l.d_y) != (1, 1, 1, 1) {
        return Err(Error::Unsupported("the naive IV limit is stated for scalar blocks".into()));
    }
    let a_ii = m.alpha(Block::I, Block::I)[(0, 0)];
    let a_yy = m.alpha(Block::Y, Block::Y)[(0, 0)];
    let denom = T::one() - a_ii * a_yy;
    if denom.abs() <= T::EPS {
        return Err(Error::Singular("1 - alpha_II alpha_YY".into()));
    }
    let c1 = m.params().cross_covariance(1)?;
    let xi = c1[(l.range(Block::X).start, l.range(Block::I).start)];
    let scale = c1.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if xi.abs() <= T::of(1e-12) * scale {
        return Err(Error::Singular("cov(X_{t-1}, I_{t-2}) vanishes".into()));
    }
    Ok(m.beta() / denom)
}
