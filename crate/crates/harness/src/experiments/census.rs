use serde_json::json;
use tsiv::identifiability::is_identifiable_niv;
use tsiv::rng::{stream_id, stream_rng};
use tsiv::var_model::{random_instrumental_var1_with, InstrumentalVar1};

use super::{par_tasks, MATRIX};
use crate::config::{ExperimentConfig, Family};
use crate::error::{HarnessError, Result};
use crate::output::{json_num, num, Meta, Report, Table};

/// Matrix `j` of `family`.
pub fn draw_family(cfg: &ExperimentConfig, j: usize) -> Result<InstrumentalVar1<f64>> {
    let mut spec = cfg.draw.spec(cfg.dims);
    let mut rng = stream_rng(cfg.seed, stream_id(MATRIX, j as u32, 0));
    match cfg.family {
        Family::Generic => Ok(random_instrumental_var1_with(&spec, &mut rng)?),
        Family::RepeatedEigenvalue => {
            spec.fixed_alpha_xx = Some(vec![-0.6, 0.0, 0.0, -0.6]);
            spec.no_feedback = true;
            Ok(random_instrumental_var1_with(&spec, &mut rng)?)
        }
        Family::EqualDiagonal => {
            let budget = spec.max_rejections;
            spec.max_rejections = 0;
            for _ in 0..=budget {
                let Ok(m) = random_instrumental_var1_with::<f64, _>(&spec, &mut rng) else { continue };
                let mut blocks = m.blocks();
                blocks.alpha_yy = blocks.alpha_xx.clone();
                let tied = InstrumentalVar1::from_blocks(m.layout(), &blocks, m.params().noise_diag().clone())?;
                if tied.params().validate_stability(spec.margin) {
                    return Ok(tied);
                }
            }
            Err(HarnessError::Numerical(format!("no stable equal-diagonal draw in {budget} attempts")))
        }
    }
}

/// Verdicts of the three classification routes for one draw.
#[derive(Clone, Debug, PartialEq)]
pub struct CensusRecord {
    pub matrix: usize,
    /// Controllability rank for one instrument, population rank otherwise.
    pub identifiable: bool,
    /// `None` when the Jordan route does not apply or delegated.
    pub jordan: Option<bool>,
    pub population: bool,
    pub smallest_singular_value: f64,
}

pub fn census_records(cfg: &ExperimentConfig) -> Result<Vec<CensusRecord>> {
    par_tasks(cfg.n_matrices, |j| -> Result<CensusRecord> {
        let m = draw_family(cfg, j)?;
        let r = is_identifiable_niv(&m, cfg.tol)?;
        Ok(CensusRecord {
            matrix: j,
            identifiable: r.identifiable,
            jordan: r.jordan.as_ref().map(|c| c.identifiable()),
            population: r.population_rank == cfg.dims.d_x + 1,
            smallest_singular_value: r.smallest_singular_value,
        })
    })
    .into_iter()
    .collect()
}

/// Fraction of identifiable draws and agreement between the routes.
pub fn run_identifiability_census(cfg: &ExperimentConfig) -> Result<Report> {
    let records = census_records(cfg)?;
    let mut t = Table::new("draws", &["matrix", "identifiable", "jordan", "population", "smallest_singular_value"]);
    for r in &records {
        let jordan = r.jordan.map_or("n/a".to_string(), |v| v.to_string());
        t.push(vec![
            r.matrix.to_string(),
            r.identifiable.to_string(),
            jordan,
            r.population.to_string(),
            num(r.smallest_singular_value),
        ]);
    }
    let n = records.len();
    let ident = records.iter().filter(|r| r.identifiable).count();
    let pop_agree = records.iter().filter(|r| r.identifiable == r.population).count();
    let decided: Vec<&CensusRecord> = records.iter().filter(|r| r.jordan.is_some()).collect();
    let jordan_agree = decided.iter().filter(|r| r.jordan == Some(r.identifiable)).count();
    let summary = json!({
        "family": cfg.family,
        "dims": cfg.dims,
        "n_matrices": n,
        "fraction_identifiable": json_num(ident as f64 / n as f64),
        "agreement": {
            "rank_vs_population": json_num(pop_agree as f64 / n as f64),
            "rank_vs_jordan": json_num(if decided.is_empty() { 1.0 } else { jordan_agree as f64 / decided.len() as f64 }),
            "jordan_decided": decided.len(),
        },
    });
    Ok(Report { meta: Meta::for_config(cfg), tables: vec![t], summary })
}
