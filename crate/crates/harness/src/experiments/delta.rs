use serde_json::json;

use super::{draw_matrices, error_records, error_table, identifiable};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{json_num, num, Meta, Report, Table};
use crate::stats::median;

/// Median error by `(Δ, T)` for `α_XX = diag(-0.6, -0.6 + Δ)` with no
/// feedback from `Y` into `X`. Matrix `j` uses the same random stream for
/// every `Δ`.
pub fn run_delta_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let mut all = Vec::new();
    let mut labels = Vec::new();
    let mut medians = Table::new("medians", &["delta", "estimator", "T", "median_error", "flagged"]);
    let mut summary_rows = Vec::new();
    for &delta in &cfg.deltas {
        let mut spec = cfg.draw.spec(cfg.dims);
        spec.fixed_alpha_xx = Some(vec![-0.6, 0.0, 0.0, -0.6 + delta]);
        spec.no_feedback = true;
        let matrices = draw_matrices(cfg.seed, &spec, cfg.n_matrices)?;
        let flags: Vec<bool> = matrices.iter().map(|m| identifiable(m, cfg.tol)).collect();
        let records = error_records(cfg, &matrices, &flags, &cfg.estimators)?;
        for e in &cfg.estimators {
            for &t in &cfg.sample_sizes {
                let errors: Vec<f64> =
                    records.iter().filter(|r| r.estimator == e.name && r.t == t).map(|r| r.error).collect();
                let med = median(&errors);
                let flagged = flags.iter().filter(|f| !**f).count();
                medians.push(vec![num(delta), e.name.clone(), t.to_string(), num(med), flagged.to_string()]);
                summary_rows.push(json!({
                    "delta": delta,
                    "estimator": e.name,
                    "T": t,
                    "median_error": json_num(med),
                    "flagged": flagged,
                }));
            }
        }
        labels.extend(std::iter::repeat_n(num(delta), records.len()));
        all.extend(records);
    }
    let summary = json!({
        "n_matrices": cfg.n_matrices,
        "replicates": cfg.replicates,
        "medians": summary_rows,
    });
    let errors = error_table(&all, Some(("delta", &labels)));
    Ok(Report { meta: Meta::for_config(cfg), tables: vec![errors, medians], summary })
}
