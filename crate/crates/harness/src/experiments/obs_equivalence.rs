use nalgebra::DMatrix;
use serde_json::json;
use tsiv::linalg::dmat;
use tsiv::var_model::VarParameters;

use crate::config::{ExperimentConfig, ObsEquivalenceParams};
use crate::error::Result;
use crate::output::{json_num, num, Meta, Report, Table};

/// Coordinates `(H1, H2, X, Y)`.
const X: usize = 2;
const Y: usize = 3;

/// The two parameterizations: under the first, `X` and `Y` are driven by
/// the chain `H1 → H2 → Y` and `H1 → X`; under the second, `H2 → X → Y`.
pub fn obs_equivalence_matrices(a: f64, b: f64, c: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let a1 = dmat(4, 4, &[a, 0., 0., 0., c, 0., 0., 0., c, 0., 0., 0., 0., b, 0., 0.]);
    let a2 = dmat(4, 4, &[a, 0., 0., 0., 0., a, 0., 0., 0., c, 0., 0., 0., 0., b, 0.]);
    (a1, a2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObsEquivalence {
    /// `(lag, row, col, first, second)` over the `(X, Y)` block.
    pub entries: Vec<(usize, usize, usize, f64, f64)>,
    pub max_abs_difference: f64,
    /// Effect of `X_{t-1}` on `Y_t` under each parameterization.
    pub tce: (f64, f64),
}

pub fn obs_equivalence(p: &ObsEquivalenceParams) -> Result<ObsEquivalence> {
    let (a1, a2) = obs_equivalence_matrices(p.a, p.b, p.c);
    let m1 = VarParameters::var1(a1, None)?;
    let m2 = VarParameters::var1(a2, None)?;
    let (g1, g2) = (m1.autocovariances(p.max_lag)?, m2.autocovariances(p.max_lag)?);
    let mut entries = Vec::new();
    let mut max_abs_difference: f64 = 0.0;
    for lag in 0..=p.max_lag {
        for r in [X, Y] {
            for c in [X, Y] {
                let (u, v) = (g1[lag][(r, c)], g2[lag][(r, c)]);
                max_abs_difference = max_abs_difference.max((u - v).abs());
                entries.push((lag, r, c, u, v));
            }
        }
    }
    let tce = |m: &VarParameters<f64>| m.total_causal_effect(&[X], &[Y], 1).map(|e| e[(0, 0)]);
    Ok(ObsEquivalence { entries, max_abs_difference, tce: (tce(&m1)?, tce(&m2)?) })
}

/// Unit noise on every coordinate.
pub fn run_obs_equivalence(cfg: &ExperimentConfig) -> Result<Report> {
    let r = obs_equivalence(&cfg.obs)?;
    let name = |k: usize| if k == X { "X" } else { "Y" };
    let mut t = Table::new("autocovariances", &["lag", "row", "col", "first", "second", "difference"]);
    for &(lag, row, col, u, v) in &r.entries {
        t.push(vec![lag.to_string(), name(row).into(), name(col).into(), num(u), num(v), num(u - v)]);
    }
    let summary = json!({
        "a": cfg.obs.a,
        "b": cfg.obs.b,
        "c": cfg.obs.c,
        "max_lag": cfg.obs.max_lag,
        "max_abs_difference": json_num(r.max_abs_difference),
        "tce_first": json_num(r.tce.0),
        "tce_second": json_num(r.tce.1),
    });
    Ok(Report { meta: Meta::for_config(cfg), tables: vec![t], summary })
}
