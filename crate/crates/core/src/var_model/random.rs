use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{A2Blocks, BlockLayout, InstrumentalVar1};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;

/// Sparsity of the `α_{I,I}` block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentCoupling {
    /// Every entry drawn.
    #[default]
    Full,
    /// Off-diagonal entries zero: mutually independent instrument processes.
    Diagonal,
}

/// Recipe for random instrumental VAR(1) matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomA2Spec {
    pub layout: BlockLayout,
    /// Required gap between the spectral radius and 1.
    pub margin: f64,
    /// Magnitude range of every free entry.
    pub low: f64,
    pub high: f64,
    /// Separate magnitude range for `α_{X,H}`, `α_{H,H}` and `α_{Y,H}`.
    pub confounding: Option<(f64, f64)>,
    /// Fixed `α_{X,X}` (row-major `d_X × d_X`), replacing the random block.
    pub fixed_alpha_xx: Option<Vec<f64>>,
    /// Force `α_{X,Y} = 0` (no feedback from `Y` into `X`).
    #[serde(default)]
    pub no_feedback: bool,
    pub coupling: InstrumentCoupling,
    /// Noise variances; unit variances when absent.
    pub noise_diag: Option<Vec<f64>>,
    pub max_rejections: usize,
}

impl RandomA2Spec {
    pub fn new(layout: BlockLayout) -> Self {
        Self {
            layout,
            margin: 0.1,
            low: 0.1,
            high: 0.9,
            confounding: None,
            fixed_alpha_xx: None,
            no_feedback: false,
            coupling: InstrumentCoupling::Full,
            noise_diag: None,
            max_rejections: 10_000,
        }
    }

    fn validate(&self) -> Result<()> {
        let range_ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi;
        if !range_ok(self.low, self.high) || self.confounding.is_some_and(|(l, h)| !range_ok(l, h)) {
            return Err(Error::Parse("magnitude bounds must satisfy 0 <= low <= high".into()));
        }
        if !(self.margin >= 0.0 && self.margin < 1.0) {
            return Err(Error::Parse("margin must lie in [0, 1)".into()));
        }
        if let Some(f) = &self.fixed_alpha_xx {
            if f.len() != self.layout.d_x * self.layout.d_x {
                return Err(Error::dims("fixed alpha_XX has the wrong number of entries"));
            }
        }
        if let Some(g) = &self.noise_diag {
            if g.len() != self.layout.dim() {
                return Err(Error::dims("noise_diag length differs from the state dimension"));
            }
        }
        Ok(())
    }
}

fn signed_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let mag = lo + (hi - lo) * rng.random::<f64>();
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

fn draw_block<T: Real, R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize, lo: f64, hi: f64) -> DMatrix<T> {
    let v: Vec<f64> = (0..r * c).map(|_| signed_uniform(rng, lo, hi)).collect();
    DMatrix::from_row_iterator(r, c, v.into_iter().map(T::of))
}

/// Draw `A_1` with the instrumental zero pattern, entries uniform on
/// `±[low, high]`, rejecting until the spectral radius is below `1 - margin`.
pub fn random_instrumental_var1<T: Real>(
    layout: BlockLayout,
    margin: f64,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<InstrumentalVar1<T>> {
    let spec = RandomA2Spec { margin, low, high, ..RandomA2Spec::new(layout) };
    random_instrumental_var1_with(&spec, &mut stream_rng(seed, 0))
}

/// Spec-driven variant drawing from a caller-owned stream.
pub fn random_instrumental_var1_with<T: Real, R: Rng + ?Sized>(
    spec: &RandomA2Spec,
    rng: &mut R,
) -> Result<InstrumentalVar1<T>> {
    spec.validate()?;
    let l = spec.layout;
    let (lo, hi) = (spec.low, spec.high);
    let (clo, chi) = spec.confounding.unwrap_or((lo, hi));
    let noise = match &spec.noise_diag {
        Some(g) => DVector::from_iterator(g.len(), g.iter().map(|&x| T::of(x))),
        None => DVector::repeat(l.dim(), T::one()),
    };
    let fixed_xx = spec
        .fixed_alpha_xx
        .as_ref()
        .map(|f| DMatrix::from_row_iterator(l.d_x, l.d_x, f.iter().map(|&x| T::of(x))));
    let margin = T::of(spec.margin);
    for _ in 0..=spec.max_rejections {
        let mut alpha_ii = draw_block::<T, _>(rng, l.d_i, l.d_i, lo, hi);
        if spec.coupling == InstrumentCoupling::Diagonal {
            alpha_ii = DMatrix::from_diagonal(&alpha_ii.diagonal());
        }
        let blocks = A2Blocks {
            alpha_ii,
            alpha_hh: draw_block(rng, l.d_h, l.d_h, clo, chi),
            alpha_xi: draw_block(rng, l.d_x, l.d_i, lo, hi),
            alpha_xh: draw_block(rng, l.d_x, l.d_h, clo, chi),
            alpha_xx: match &fixed_xx {
                Some(f) => f.clone(),
                None => draw_block(rng, l.d_x, l.d_x, lo, hi),
            },
            alpha_xy: {
                let m = draw_block(rng, l.d_x, l.d_y, lo, hi);
                if spec.no_feedback { m * T::zero() } else { m }
            },
            alpha_yh: draw_block(rng, l.d_y, l.d_h, clo, chi),
            beta: draw_block(rng, l.d_y, l.d_x, lo, hi),
            alpha_yy: draw_block(rng, l.d_y, l.d_y, lo, hi),
        };
        let candidate = InstrumentalVar1::from_blocks(l, &blocks, noise.clone())?;
        if candidate.params().validate_stability(margin) {
            return Ok(candidate);
        }
    }
    Err(Error::RejectionBudgetExhausted(spec.max_rejections))
}
