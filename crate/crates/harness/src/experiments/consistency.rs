use serde_json::json;

use super::{draw_matrices, error_records, error_table, identifiable, ErrorRecord};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{json_num, num, Meta, Report, Table};
use crate::stats::{median, quantile};

/// Median error and upper tail of `log10(error)` per estimator and sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSummary {
    pub estimator: String,
    pub t: usize,
    pub median_error: f64,
    pub p95_log10_error: f64,
    pub flagged: usize,
}

pub(crate) fn summarize(records: &[ErrorRecord], estimators: &[String], sizes: &[usize]) -> Vec<ErrorSummary> {
    let mut out = Vec::new();
    for e in estimators {
        for &t in sizes {
            let sel: Vec<&ErrorRecord> = records.iter().filter(|r| &r.estimator == e && r.t == t).collect();
            let errors: Vec<f64> = sel.iter().map(|r| r.error).collect();
            let logs: Vec<f64> = errors.iter().map(|v| v.log10()).collect();
            out.push(ErrorSummary {
                estimator: e.clone(),
                t,
                median_error: median(&errors),
                p95_log10_error: quantile(&logs, 0.95),
                flagged: sel.iter().filter(|r| !r.identifiable).count(),
            });
        }
    }
    out
}

pub(crate) fn summary_table(rows: &[ErrorSummary]) -> Table {
    let mut t = Table::new("summary", &["estimator", "T", "median_error", "p95_log10_error", "flagged"]);
    for r in rows {
        t.push(vec![r.estimator.clone(), r.t.to_string(), num(r.median_error), num(r.p95_log10_error), r.flagged.to_string()]);
    }
    t
}

/// Estimation error of every configured estimator over random matrices and
/// sample sizes.
pub fn run_consistency(cfg: &ExperimentConfig) -> Result<Report> {
    let matrices = draw_matrices(cfg.seed, &cfg.draw.spec(cfg.dims), cfg.n_matrices)?;
    let flags: Vec<bool> = matrices.iter().map(|m| identifiable(m, cfg.tol)).collect();
    let records = error_records(cfg, &matrices, &flags, &cfg.estimators)?;
    let names: Vec<String> = cfg.estimators.iter().map(|e| e.name.clone()).collect();
    let rows = summarize(&records, &names, &cfg.sample_sizes);
    let summary = json!({
        "n_matrices": cfg.n_matrices,
        "replicates": cfg.replicates,
        "flagged_matrices": flags.iter().filter(|f| !**f).count(),
        "by_estimator_and_T": rows.iter().map(|r| json!({
            "estimator": r.estimator,
            "T": r.t,
            "median_error": json_num(r.median_error),
            "p95_log10_error": json_num(r.p95_log10_error),
        })).collect::<Vec<_>>(),
    });
    Ok(Report { meta: Meta::for_config(cfg), tables: vec![error_table(&records, None), summary_table(&rows)], summary })
}
