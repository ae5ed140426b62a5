use serde_json::json;

use super::{draw_matrices, error_records, error_table, identifiable};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{json_num, num, Meta, Report, Table};
use crate::stats::median;

/// Per matrix, `log10 error(first) - log10 error(second)` of the two
/// configured estimators; positive values favour the second.
pub fn run_lags_vs_instruments(cfg: &ExperimentConfig) -> Result<Report> {
    let [first, second] = cfg.estimators.as_slice() else {
        return Err(HarnessError::Config("lags_vs_instruments compares exactly two estimators".into()));
    };
    let matrices = draw_matrices(cfg.seed, &cfg.draw.spec(cfg.dims), cfg.n_matrices)?;
    let flags: Vec<bool> = matrices.iter().map(|m| identifiable(m, cfg.tol)).collect();
    let records = error_records(cfg, &matrices, &flags, &cfg.estimators)?;

    let n_t = cfg.sample_sizes.len();
    let mut ratios = Table::new("ratios", &["matrix", "T", "error_first", "error_second", "log10_ratio"]);
    let mut by_t = Vec::new();
    for (ti, &t) in cfg.sample_sizes.iter().enumerate() {
        let mut values = Vec::with_capacity(matrices.len());
        for j in 0..matrices.len() {
            // records are ordered (matrix, estimator, T)
            let a = records[(j * 2) * n_t + ti].error;
            let b = records[(j * 2 + 1) * n_t + ti].error;
            let ratio = a.log10() - b.log10();
            values.push(ratio);
            ratios.push(vec![j.to_string(), t.to_string(), num(a), num(b), num(ratio)]);
        }
        let valid: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        let positive = valid.iter().filter(|v| **v > 0.0).count();
        by_t.push(json!({
            "T": t,
            "fraction_positive": json_num(positive as f64 / valid.len().max(1) as f64),
            "median_log10_ratio": json_num(median(&values)),
            "undefined": values.len() - valid.len(),
        }));
    }
    let summary = json!({
        "first": first.name,
        "second": second.name,
        "n_matrices": cfg.n_matrices,
        "replicates": cfg.replicates,
        "by_T": by_t,
    });
    Ok(Report { meta: Meta::for_config(cfg), tables: vec![error_table(&records, None), ratios], summary })
}
