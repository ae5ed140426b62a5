use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{Block, BlockLayout, VarParameters};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::stream_rng;
use crate::scalar::Real;

/// Observed trajectory: column `t - 1` holds `S_t` for `t = 1..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesSample<T: Real> {
    data: DMatrix<T>,
    layout: BlockLayout,
}

/// `do(X_{t0} := value)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterventionSpec<T: Real> {
    pub target: Block,
    /// One-based time index.
    pub t0: usize,
    pub value: DVector<T>,
}

impl<T: Real> InterventionSpec<T> {
    pub fn on_x(t0: usize, value: DVector<T>) -> Self {
        Self { target: Block::X, t0, value }
    }
}

impl<T: Real> TimeSeriesSample<T> {
    pub fn new(data: DMatrix<T>, layout: BlockLayout) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::InsufficientSamples("a sample needs at least one time point".into()));
        }
        if data.nrows() != layout.dim() {
            return Err(Error::dims(format!("sample has {} rows, layout needs {}", data.nrows(), layout.dim())));
        }
        Ok(Self { data, layout })
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    /// `S_t`, one-based.
    pub fn at(&self, t: usize) -> DVector<T> {
        self.data.column(t - 1).into_owned()
    }

    /// Rows of `block` for times `from..=to` (one-based), shape `d_b × (to - from + 1)`.
    pub fn block_window(&self, block: Block, from: usize, to: usize) -> DMatrix<T> {
        let r = self.layout.range(block);
        self.data.view((r.start, from - 1), (r.len(), to + 1 - from)).into_owned()
    }

    /// Entire trajectory of one block.
    pub fn block(&self, block: Block) -> DMatrix<T> {
        self.block_window(block, 1, self.len())
    }
}

impl<T: Real> VarParameters<T> {
    /// Draw `T` steps with `S_1, …, S_p` from the stationary law.
    pub fn simulate(&self, len: usize, seed: u64) -> Result<TimeSeriesSample<T>> {
        self.simulate_with_rng(len, &mut stream_rng(seed, 0))
    }

    pub fn simulate_with_rng<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Result<TimeSeriesSample<T>> {
        self.generate(len, None, rng)
    }

    /// Same draws as [`Self::simulate`], with `X_{t0}` overwritten before it
    /// feeds `S_{t0+1}`.
    pub fn simulate_with_intervention(
        &self,
        len: usize,
        spec: &InterventionSpec<T>,
        seed: u64,
    ) -> Result<TimeSeriesSample<T>> {
        self.simulate_with_intervention_rng(len, spec, &mut stream_rng(seed, 0))
    }

    pub fn simulate_with_intervention_rng<R: Rng + ?Sized>(
        &self,
        len: usize,
        spec: &InterventionSpec<T>,
        rng: &mut R,
    ) -> Result<TimeSeriesSample<T>> {
        self.generate(len, Some(spec), rng)
    }

    fn generate<R: Rng + ?Sized>(
        &self,
        len: usize,
        spec: Option<&InterventionSpec<T>>,
        rng: &mut R,
    ) -> Result<TimeSeriesSample<T>> {
        if len == 0 {
            return Err(Error::InsufficientSamples("T must be at least 1".into()));
        }
        let layout = self.layout_or_default();
        let d = self.dim();
        let p = self.order();
        let x_range = layout.range(Block::X);
        if let Some(s) = spec {
            if s.target != Block::X {
                return Err(Error::InvalidIntervention(format!("only X can be intervened on, got {}", s.target.name())));
            }
            if s.t0 < 1 || s.t0 > len {
                return Err(Error::InvalidIntervention(format!("t0 = {} outside 1..={len}", s.t0)));
            }
            if s.value.len() != x_range.len() || x_range.is_empty() {
                return Err(Error::InvalidIntervention(format!(
                    "value has {} entries, X has {}",
                    s.value.len(),
                    x_range.len()
                )));
            }
            if p > 1 && s.t0 < p {
                return Err(Error::InvalidIntervention(format!(
                    "t0 = {} lies inside the jointly drawn initial block of {p} states",
                    s.t0
                )));
            }
        }

        let cov = self.stationary_covariance()?;
        let chol = linalg::cholesky_lower(&cov.companion)?;
        let noise_sd: Vec<T> = self.noise_diag().iter().map(|g| g.sqrt()).collect();

        let mut data = DMatrix::zeros(d, len);
        // companion state is (S_p, S_{p-1}, …, S_1)
        let z = DVector::from_fn(p * d, |_, _| T::standard_normal(rng));
        let init = chol * z;
        for k in 0..p.min(len) {
            let block = init.rows((p - 1 - k) * d, d);
            data.column_mut(k).copy_from(&block);
        }
        let apply = |data: &mut DMatrix<T>, t: usize| {
            if let Some(s) = spec {
                if s.t0 == t {
                    data.view_mut((x_range.start, t - 1), (x_range.len(), 1)).copy_from(&s.value);
                }
            }
        };
        for t in 1..=p.min(len) {
            apply(&mut data, t);
        }
        for t in (p + 1)..=len {
            let mut next = DVector::from_fn(d, |i, _| noise_sd[i] * T::standard_normal(rng));
            for (k, a) in self.coeffs().iter().enumerate() {
                next += a * data.column(t - 2 - k);
            }
            data.column_mut(t - 1).copy_from(&next);
            apply(&mut data, t);
        }
        TimeSeriesSample::new(data, layout)
    }
}
