//! The six experiments and the machinery they share.
//!
//! Every random draw comes from a stream keyed by `(purpose, matrix,
//! replicate)`, tasks share no mutable state, and results are merged in key
//! order, so outputs do not depend on the worker count.

mod census;
mod consistency;
mod delta;
mod lags;
mod obs_equivalence;
mod predict;

use nalgebra::DMatrix;
use rayon::prelude::*;
use tsiv::estimators::{civ_fit, ts_align};
use tsiv::identifiability::is_identifiable_niv;
use tsiv::rng::{stream_id, stream_rng};
use tsiv::var_model::{random_instrumental_var1_with, InstrumentalVar1, RandomA2Spec, TimeSeriesSample};

pub use census::{census_records, draw_family, run_identifiability_census, CensusRecord};
pub use consistency::run_consistency;
pub use delta::run_delta_sweep;
pub use lags::run_lags_vs_instruments;
pub use obs_equivalence::{obs_equivalence, obs_equivalence_matrices, run_obs_equivalence, ObsEquivalence};
pub use predict::run_predict;

use crate::config::{EstimatorSpec, ExperimentConfig, ExperimentId};
use crate::error::{HarnessError, Result};
use crate::output::{num, Report, Table};

/// Stream purposes.
pub const MATRIX: u16 = 1;
pub const SAMPLE: u16 = 2;
pub const ESTIMATION: u16 = 3;

/// Run `cfg` on `workers` threads (the global pool when `None`).
pub fn run(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Report> {
    cfg.validate()?;
    let go = || match cfg.id {
        ExperimentId::Consistency => run_consistency(cfg),
        ExperimentId::LagsVsInstruments => run_lags_vs_instruments(cfg),
        ExperimentId::DeltaSweep => run_delta_sweep(cfg),
        ExperimentId::PredictUnderIntervention => run_predict(cfg),
        ExperimentId::ObsEquivalence => run_obs_equivalence(cfg),
        ExperimentId::IdentifiabilityCensus => run_identifiability_census(cfg),
    };
    match workers {
        None => go(),
        Some(0) => Err(HarnessError::Config("workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Io(e.to_string()))?
            .install(go),
    }
}

/// `f(0), …, f(n - 1)` in parallel, returned in index order.
pub(crate) fn par_tasks<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    (0..n).into_par_iter().map(f).collect()
}

/// Matrix `j` of the experiment.
pub fn draw_matrix(seed: u64, spec: &RandomA2Spec, j: usize) -> Result<InstrumentalVar1<f64>> {
    Ok(random_instrumental_var1_with(spec, &mut stream_rng(seed, stream_id(MATRIX, j as u32, 0)))?)
}

pub(crate) fn draw_matrices(seed: u64, spec: &RandomA2Spec, n: usize) -> Result<Vec<InstrumentalVar1<f64>>> {
    par_tasks(n, |j| draw_matrix(seed, spec, j)).into_iter().collect()
}

/// Identifiability verdict; a failing report counts as not identifiable.
pub(crate) fn identifiable(m: &InstrumentalVar1<f64>, tol: f64) -> bool {
    is_identifiable_niv(m, tol).map(|r| r.identifiable).unwrap_or(false)
}

/// `β̂` of estimator `e` on `sample`.
pub fn fit_beta(sample: &TimeSeriesSample<f64>, e: &EstimatorSpec) -> tsiv::Result<DMatrix<f64>> {
    Ok(civ_fit(&ts_align(sample, &e.alignment)?)?.beta_hat)
}

/// First `len` time points of `sample`.
pub(crate) fn prefix(sample: &TimeSeriesSample<f64>, len: usize) -> TimeSeriesSample<f64> {
    TimeSeriesSample::new(sample.data().columns(0, len).into_owned(), sample.layout()).expect("prefix of a valid sample")
}

/// `‖β̂ - β‖²`, NaN when the fit failed.
fn squared_error(fit: tsiv::Result<DMatrix<f64>>, beta: &DMatrix<f64>) -> f64 {
    match fit {
        Ok(b) => (b - beta).norm_squared(),
        Err(_) => f64::NAN,
    }
}

/// Mean squared estimation error of one estimator on one matrix at one
/// sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub matrix: usize,
    pub estimator: String,
    pub t: usize,
    /// Mean over successful replicates; `+inf` when none succeeded.
    pub error: f64,
    pub failures: usize,
    /// False for draws the identifiability check rejects (kept, not dropped).
    pub identifiable: bool,
}

/// Errors for every (matrix, estimator, sample size). Replicate `r` of
/// matrix `j` is one trajectory of the largest length; smaller sample sizes
/// use its prefixes.
pub(crate) fn error_records(
    cfg: &ExperimentConfig,
    matrices: &[InstrumentalVar1<f64>],
    flags: &[bool],
    estimators: &[EstimatorSpec],
) -> Result<Vec<ErrorRecord>> {
    let s = cfg.replicates;
    let t_max = *cfg.sample_sizes.iter().max().expect("validated non-empty");
    let per_task = par_tasks(matrices.len() * s, |task| -> Result<Vec<f64>> {
        let (j, r) = (task / s, task % s);
        let m = &matrices[j];
        let mut rng = stream_rng(cfg.seed, stream_id(SAMPLE, j as u32, r as u32));
        let full = m.params().simulate_with_rng(t_max, &mut rng)?;
        let beta = m.beta();
        let mut out = Vec::with_capacity(estimators.len() * cfg.sample_sizes.len());
        for e in estimators {
            for &t in &cfg.sample_sizes {
                out.push(squared_error(fit_beta(&prefix(&full, t), e), &beta));
            }
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n_t = cfg.sample_sizes.len();
    let mut records = Vec::with_capacity(matrices.len() * estimators.len() * n_t);
    for j in 0..matrices.len() {
        for (ei, e) in estimators.iter().enumerate() {
            for (ti, &t) in cfg.sample_sizes.iter().enumerate() {
                let reps: Vec<f64> = (0..s).map(|r| per_task[j * s + r][ei * n_t + ti]).collect();
                let (error, failures) = crate::stats::finite_mean(&reps);
                records.push(ErrorRecord {
                    matrix: j,
                    estimator: e.name.clone(),
                    t,
                    error,
                    failures,
                    identifiable: flags[j],
                });
            }
        }
    }
    Ok(records)
}

pub(crate) fn error_table(records: &[ErrorRecord], extra: Option<(&str, &[String])>) -> Table {
    let mut cols = Vec::new();
    if let Some((name, _)) = extra {
        cols.push(name);
    }
    cols.extend(["matrix", "estimator", "T", "error", "failures", "identifiable"]);
    let mut t = Table::new("errors", &cols);
    for (k, r) in records.iter().enumerate() {
        let mut row = Vec::new();
        if let Some((_, values)) = extra {
            row.push(values[k].clone());
        }
        row.extend([
            r.matrix.to_string(),
            r.estimator.clone(),
            r.t.to_string(),
            num(r.error),
            r.failures.to_string(),
            r.identifiable.to_string(),
        ]);
        t.push(row);
    }
    t
}
