use nalgebra::DMatrix;
use serde_json::json;
use tsiv::prediction::{fit_intervention_predictor, fit_ols_predictor, predict_from_sample, InterventionPredictor};
use tsiv::rng::{stream_id, stream_rng};
use tsiv::var_model::Block;

use super::{draw_matrices, fit_beta, par_tasks, prefix, ESTIMATION, SAMPLE};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{json_num, num, Meta, Report, Table};
use crate::stats::{finite_mean, median, sample_sd};

/// Squared prediction error of `Y_{T+1}` under `do(X_T := n σ)`, for the OLS
/// baseline and for the causal predictor fed by each configured estimator.
///
/// Per replicate, `β̂` is fitted on its own trajectory of length `T`. A
/// second trajectory of length `T + 1` provides the training data `S_1..S_T`
/// and the outcome: intervening on `X_T` leaves `S_T`'s other coordinates and
/// the innovation of `Y_{T+1}` unchanged, so the interventional outcome is
/// the observed one shifted by `β (x - X_T)`. `σ` is the sample standard
/// deviation of `X_1, …, X_{T-1}`.
pub fn run_predict(cfg: &ExperimentConfig) -> Result<Report> {
    let matrices = draw_matrices(cfg.seed, &cfg.draw.spec(cfg.dims), cfg.n_matrices)?;
    let t = cfg.sample_sizes[0];
    let s = cfg.replicates;
    let (pm, pl) = (cfg.predictor_m, cfg.predictor_l);
    let n_pred = cfg.estimators.len() + 1;
    let n_mult = cfg.intervention_multiples.len();

    let per_task = par_tasks(matrices.len() * s, |task| -> Result<Vec<f64>> {
        let (j, r) = (task / s, task % s);
        let m = &matrices[j];
        let key = |purpose| stream_rng(cfg.seed, stream_id(purpose, j as u32, r as u32));
        let est_sample = m.params().simulate_with_rng(t, &mut key(ESTIMATION))?;
        let path = m.params().simulate_with_rng(t + 1, &mut key(SAMPLE))?;
        let train = prefix(&path, t);

        let mut predictors: Vec<Option<InterventionPredictor<f64>>> = vec![fit_ols_predictor(&train, pm, pl).ok()];
        for e in &cfg.estimators {
            predictors.push(fit_beta(&est_sample, e).ok().and_then(|b| fit_intervention_predictor(&b, &train, pm, pl).ok()));
        }
        let x_obs = train.block(Block::X);
        let sigma = sample_sd(x_obs.iter().take(t - 1).copied().collect::<Vec<_>>().into_iter());
        let x_t = x_obs[(0, t - 1)];
        let y_next = path.at(t + 1)[path.layout().range(Block::Y).start];
        let beta = m.beta()[(0, 0)];

        let mut out = Vec::with_capacity(n_mult * n_pred);
        for &mult in &cfg.intervention_multiples {
            let x = mult * sigma;
            let truth = y_next + beta * (x - x_t);
            let xv = DMatrix::from_element(1, 1, x);
            for p in &predictors {
                let err = match p {
                    Some(p) => match predict_from_sample(p, &train, t, &xv) {
                        Ok(yhat) => (yhat[(0, 0)] - truth).powi(2),
                        Err(_) => f64::NAN,
                    },
                    None => f64::NAN,
                };
                out.push(err);
            }
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let names: Vec<String> = std::iter::once("ols".to_string()).chain(cfg.estimators.iter().map(|e| e.name.clone())).collect();
    let mut mspe_table = Table::new("mspe", &["matrix", "multiple", "predictor", "mspe", "failures"]);
    // mspe[k][j][p]
    let mut mspe = vec![vec![vec![0.0; n_pred]; matrices.len()]; n_mult];
    for j in 0..matrices.len() {
        for (k, &mult) in cfg.intervention_multiples.iter().enumerate() {
            for (p, name) in names.iter().enumerate() {
                let reps: Vec<f64> = (0..s).map(|r| per_task[j * s + r][k * n_pred + p]).collect();
                let (mean, failures) = finite_mean(&reps);
                mspe[k][j][p] = mean;
                mspe_table.push(vec![j.to_string(), num(mult), name.clone(), num(mean), failures.to_string()]);
            }
        }
    }

    let mut cols = vec!["matrix".to_string(), "multiple".to_string(), "mspe_ols".to_string()];
    for n in &names[1..] {
        cols.push(format!("mspe_{n}"));
        cols.push(format!("log_ratio_{n}"));
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut pairs = Table::new("pairs", &col_refs);
    let mut summary_rows = Vec::new();
    for (k, &mult) in cfg.intervention_multiples.iter().enumerate() {
        for (j, row_vals) in mspe[k].iter().enumerate() {
            let mut row = vec![j.to_string(), num(mult), num(row_vals[0])];
            for p in 1..n_pred {
                row.push(num(row_vals[p]));
                row.push(num((row_vals[0] / row_vals[p]).ln()));
            }
            pairs.push(row);
        }
        for (p, name) in names.iter().enumerate().skip(1) {
            let ratios: Vec<f64> = mspe[k].iter().map(|v| (v[0] / v[p]).ln()).collect();
            let ols_worse = mspe[k].iter().filter(|v| v[0] > v[p]).count();
            summary_rows.push(json!({
                "multiple": mult,
                "estimator": name,
                "fraction_ols_worse": json_num(ols_worse as f64 / matrices.len() as f64),
                "median_abs_log_ratio": json_num(median(&ratios.iter().map(|v| v.abs()).collect::<Vec<_>>())),
                "median_mspe_ols": json_num(median(&mspe[k].iter().map(|v| v[0]).collect::<Vec<_>>())),
                "median_mspe_iv": json_num(median(&mspe[k].iter().map(|v| v[p]).collect::<Vec<_>>())),
            }));
        }
    }
    let summary = json!({
        "n_matrices": cfg.n_matrices,
        "replicates": cfg.replicates,
        "T": t,
        "predictor_m": pm,
        "predictor_l": pl,
        "comparisons": summary_rows,
    });
    Ok(Report { meta: Meta::for_config(cfg), tables: vec![mspe_table, pairs], summary })
}
