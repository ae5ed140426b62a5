//! VAR(p) processes: parameters, stationarity, sampling, interventions and
//! total causal effects.

mod io;
mod layout;
mod random;
mod simulate;
mod tce;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

pub use io::{read_sample_csv, write_sample_csv, ParamFile};
pub use layout::{Block, BlockLayout};
pub use random::{random_instrumental_var1, random_instrumental_var1_with, InstrumentCoupling, RandomA2Spec};
pub use simulate::{InterventionSpec, TimeSeriesSample};
pub use tce::total_causal_effect;

/// Above this companion dimension the Lyapunov equation is solved by
/// doubling instead of the Kronecker system.
pub const DIRECT_LYAPUNOV_MAX_DIM: usize = 20;

/// Parameters of `S_t = A_1 S_{t-1} + … + A_p S_{t-p} + ε_t`, `ε_t ~ N(0, Γ)`
/// with diagonal `Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarParameters<T: Real> {
    coeffs: Vec<DMatrix<T>>,
    noise: DVector<T>,
    layout: Option<BlockLayout>,
}

/// Lag-0 covariance together with the full companion-form covariance.
#[derive(Clone, Debug)]
pub struct StationaryCovariance<T: Real> {
    /// `pd × pd` covariance of `(S_t, …, S_{t-p+1})`.
    pub companion: DMatrix<T>,
    /// `d × d` block `E[S_t S_tᵀ]`.
    pub lag0: DMatrix<T>,
}

impl<T: Real> VarParameters<T> {
    pub fn new(coeffs: Vec<DMatrix<T>>, noise_diag: DVector<T>, layout: Option<BlockLayout>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::dims("at least one coefficient matrix is required"));
        }
        let d = coeffs[0].nrows();
        if d == 0 {
            return Err(Error::dims("state dimension must be positive"));
        }
        for (k, a) in coeffs.iter().enumerate() {
            if a.nrows() != d || a.ncols() != d {
                return Err(Error::dims(format!("A_{} is {}x{}, expected {d}x{d}", k + 1, a.nrows(), a.ncols())));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("A_{} has non-finite entries", k + 1)));
            }
        }
        if noise_diag.len() != d {
            return Err(Error::dims(format!("noise has {} entries, expected {d}", noise_diag.len())));
        }
        if noise_diag.iter().any(|g| !g.is_finite() || *g <= T::zero()) {
            return Err(Error::InvalidNoise);
        }
        if let Some(l) = layout {
            if l.dim() != d {
                return Err(Error::dims(format!("layout covers {} coordinates, state has {d}", l.dim())));
            }
        }
        Ok(Self { coeffs, noise: noise_diag, layout })
    }

    /// VAR(1) with unit noise.
    pub fn var1(a: DMatrix<T>, layout: Option<BlockLayout>) -> Result<Self> {
        let d = a.nrows();
        Self::new(vec![a], DVector::repeat(d, T::one()), layout)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// `A_k`, `k` in `1..=p`.
    pub fn coeff(&self, k: usize) -> &DMatrix<T> {
        &self.coeffs[k - 1]
    }

    pub fn coeffs(&self) -> &[DMatrix<T>] {
        &self.coeffs
    }

    pub fn noise_diag(&self) -> &DVector<T> {
        &self.noise
    }

    pub fn noise_cov(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&self.noise)
    }

    pub fn layout(&self) -> Option<BlockLayout> {
        self.layout
    }

    /// Layout, falling back to an all-`H` layout.
    pub fn layout_or_default(&self) -> BlockLayout {
        self.layout.unwrap_or_else(|| BlockLayout::unstructured(self.dim()))
    }

    pub fn with_noise(&self, noise_diag: DVector<T>) -> Result<Self> {
        Self::new(self.coeffs.clone(), noise_diag, self.layout)
    }

    /// Companion matrix of size `pd × pd`.
    pub fn companion(&self) -> DMatrix<T> {
        let d = self.dim();
        let p = self.order();
        let mut c = DMatrix::zeros(p * d, p * d);
        for (k, a) in self.coeffs.iter().enumerate() {
            c.view_mut((0, k * d), (d, d)).copy_from(a);
        }
        for k in 1..p {
            c.view_mut((k * d, (k - 1) * d), (d, d)).fill_with_identity();
        }
        c
    }

    /// Noise covariance of the companion form (zero below the first block).
    pub fn companion_noise(&self) -> DMatrix<T> {
        let d = self.dim();
        let mut g = DMatrix::zeros(self.order() * d, self.order() * d);
        g.view_mut((0, 0), (d, d)).copy_from(&self.noise_cov());
        g
    }

    pub fn spectral_radius(&self) -> T {
        linalg::spectral_radius(&self.companion())
    }

    /// True iff the companion spectral radius is `< 1 - margin`.
    pub fn validate_stability(&self, margin: T) -> bool {
        self.spectral_radius() < T::one() - margin
    }

    fn require_stable(&self) -> Result<()> {
        let radius = self.spectral_radius();
        if radius < T::one() {
            Ok(())
        } else {
            Err(Error::Unstable { radius: radius.as_f64(), bound: 1.0 })
        }
    }

    /// Solve `Σ = Ā Σ Āᵀ + Γ̄` for the companion form.
    pub fn stationary_covariance(&self) -> Result<StationaryCovariance<T>> {
        self.require_stable()?;
        let a = self.companion();
        let g = self.companion_noise();
        let mut sigma = if a.nrows() <= DIRECT_LYAPUNOV_MAX_DIM {
            lyapunov_direct(&a, &g)?
        } else {
            lyapunov_doubling(&a, &g)?
        };
        linalg::symmetrize(&mut sigma);
        let d = self.dim();
        let lag0 = sigma.view((0, 0), (d, d)).into_owned();
        Ok(StationaryCovariance { companion: sigma, lag0 })
    }

    /// `E[S_t S_{t-h}ᵀ]`.
    pub fn cross_covariance(&self, h: usize) -> Result<DMatrix<T>> {
        let cov = self.stationary_covariance()?;
        Ok(cross_covariance_from(&self.companion(), &cov, self.dim(), h))
    }

    /// Autocovariances for lags `0..=max_lag` sharing one Lyapunov solve.
    pub fn autocovariances(&self, max_lag: usize) -> Result<Vec<DMatrix<T>>> {
        let cov = self.stationary_covariance()?;
        let a = self.companion();
        let d = self.dim();
        let mut out = Vec::with_capacity(max_lag + 1);
        let mut cur = cov.companion.clone();
        for _ in 0..=max_lag {
            out.push(cur.view((0, 0), (d, d)).into_owned());
            cur = &a * cur;
        }
        Ok(out)
    }

    /// Sum over compositions of `lag` into parts in `1..=p`, restricted to
    /// rows `targets` and columns `sources`.
    pub fn total_causal_effect(&self, sources: &[usize], targets: &[usize], lag: usize) -> Result<DMatrix<T>> {
        total_causal_effect(&self.coeffs, sources, targets, lag)
    }
}

fn cross_covariance_from<T: Real>(companion: &DMatrix<T>, cov: &StationaryCovariance<T>, d: usize, h: usize) -> DMatrix<T> {
    let full = linalg::matrix_power(companion, h) * &cov.companion;
    full.view((0, 0), (d, d)).into_owned()
}

/// `(I - A⊗A) vec Σ = vec Γ` with column-major `vec`.
fn lyapunov_direct<T: Real>(a: &DMatrix<T>, g: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let kron = a.kronecker(a);
    let lhs = DMatrix::<T>::identity(n * n, n * n) - kron;
    let rhs = DVector::from_column_slice(g.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Lyapunov system".into()))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Doubling evaluation of `Σ_k A^k Γ (A^k)ᵀ`, stopped once the increment
/// drops below `1e-14 ‖Σ‖`.
fn lyapunov_doubling<T: Real>(a: &DMatrix<T>, g: &DMatrix<T>) -> Result<DMatrix<T>> {
    let tol = T::of(1e-14);
    let mut sigma = g.clone();
    let mut ak = a.clone();
    for _ in 0..200 {
        let inc = &ak * &sigma * ak.transpose();
        sigma += &inc;
        ak = &ak * &ak;
        if linalg::norm_inf(&inc) <= tol * linalg::norm_inf(&sigma) {
            return Ok(sigma);
        }
    }
    Err(Error::Numerical("Lyapunov doubling did not converge".into()))
}

/// VAR(1) with the instrumental sparsity pattern on `A_1`:
///
/// ```text
///        I      H      X      Y
///   I  α_II    0      0      0
///   H   0     α_HH    0      0
///   X  α_XI   α_XH   α_XX   α_XY
///   Y   0     α_YH   β      α_YY
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentalVar1<T: Real> {
    params: VarParameters<T>,
    layout: BlockLayout,
}

/// The nonzero blocks of an instrumental `A_1`.
#[derive(Clone, Debug)]
pub struct A2Blocks<T: Real> {
    pub alpha_ii: DMatrix<T>,
    pub alpha_hh: DMatrix<T>,
    pub alpha_xi: DMatrix<T>,
    pub alpha_xh: DMatrix<T>,
    pub alpha_xx: DMatrix<T>,
    pub alpha_xy: DMatrix<T>,
    pub alpha_yh: DMatrix<T>,
    pub beta: DMatrix<T>,
    pub alpha_yy: DMatrix<T>,
}

impl<T: Real> InstrumentalVar1<T> {
    /// Wrap parameters, checking order 1, a layout and the zero pattern.
    pub fn new(params: VarParameters<T>) -> Result<Self> {
        if params.order() != 1 {
            return Err(Error::Unsupported("instrumental processes are VAR(1)".into()));
        }
        let layout = params
            .layout()
            .ok_or_else(|| Error::dims("instrumental process needs a block layout"))?;
        let a = params.coeff(1);
        let zero_outside = |row: Block, allowed: &[Block]| {
            layout.range(row).all(|i| {
                Block::ALL
                    .iter()
                    .filter(|b| !allowed.contains(b))
                    .all(|&b| layout.range(b).all(|j| a[(i, j)] == T::zero()))
            })
        };
        let ok = zero_outside(Block::I, &[Block::I])
            && zero_outside(Block::H, &[Block::H])
            && zero_outside(Block::Y, &[Block::H, Block::X, Block::Y]);
        if !ok {
            return Err(Error::dims("A_1 violates the instrumental zero pattern"));
        }
        Ok(Self { params, layout })
    }

    pub fn from_blocks(layout: BlockLayout, blocks: &A2Blocks<T>, noise_diag: DVector<T>) -> Result<Self> {
        let d = layout.dim();
        let mut a = DMatrix::zeros(d, d);
        let mut put = |rb: Block, cb: Block, m: &DMatrix<T>| -> Result<()> {
            let (r, c) = (layout.range(rb), layout.range(cb));
            if m.nrows() != r.len() || m.ncols() != c.len() {
                return Err(Error::dims(format!(
                    "block ({},{}) is {}x{}, expected {}x{}",
                    rb.name(),
                    cb.name(),
                    m.nrows(),
                    m.ncols(),
                    r.len(),
                    c.len()
                )));
            }
            a.view_mut((r.start, c.start), (r.len(), c.len())).copy_from(m);
            Ok(())
        };
        put(Block::I, Block::I, &blocks.alpha_ii)?;
        put(Block::H, Block::H, &blocks.alpha_hh)?;
        put(Block::X, Block::I, &blocks.alpha_xi)?;
        put(Block::X, Block::H, &blocks.alpha_xh)?;
        put(Block::X, Block::X, &blocks.alpha_xx)?;
        put(Block::X, Block::Y, &blocks.alpha_xy)?;
        put(Block::Y, Block::H, &blocks.alpha_yh)?;
        put(Block::Y, Block::X, &blocks.beta)?;
        put(Block::Y, Block::Y, &blocks.alpha_yy)?;
        Self::new(VarParameters::new(vec![a], noise_diag, Some(layout))?)
    }

    pub fn params(&self) -> &VarParameters<T> {
        &self.params
    }

    pub fn into_params(self) -> VarParameters<T> {
        self.params
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn a(&self) -> &DMatrix<T> {
        self.params.coeff(1)
    }

    /// Submatrix `α_{rows, cols}` of `A_1`.
    pub fn alpha(&self, rows: Block, cols: Block) -> DMatrix<T> {
        let (r, c) = (self.layout.range(rows), self.layout.range(cols));
        self.a().view((r.start, c.start), (r.len(), c.len())).into_owned()
    }

    /// The causal effect `β = α_{Y,X}`.
    pub fn beta(&self) -> DMatrix<T> {
        self.alpha(Block::Y, Block::X)
    }

    pub fn blocks(&self) -> A2Blocks<T> {
        A2Blocks {
            alpha_ii: self.alpha(Block::I, Block::I),
            alpha_hh: self.alpha(Block::H, Block::H),
            alpha_xi: self.alpha(Block::X, Block::I),
            alpha_xh: self.alpha(Block::X, Block::H),
            alpha_xx: self.alpha(Block::X, Block::X),
            alpha_xy: self.alpha(Block::X, Block::Y),
            alpha_yh: self.alpha(Block::Y, Block::H),
            beta: self.beta(),
            alpha_yy: self.alpha(Block::Y, Block::Y),
        }
    }
}
