//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;
use tsiv::estimators::{civ_fit, ts_align, WeightChoice};
use tsiv::identifiability::is_identifiable_niv;
use tsiv::prediction::{fit_intervention_predictor, predict_from_sample};
use tsiv::rng::{stream_id, stream_rng};
use tsiv::var_model::{read_sample_csv, write_sample_csv, BlockLayout, InstrumentalVar1, ParamFile, TimeSeriesSample};

use crate::config::{DrawConfig, EstimatorSpec, ExperimentConfig, ExperimentId};
use crate::error::{HarnessError, Result};
use crate::experiments::{self, fit_beta};

#[derive(Debug, Parser)]
#[command(name = "tsiv", version, about = "Instrumental-variable estimation for confounded VAR time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (JSON, keys override the experiment defaults).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; results go to stdout when absent (experiments
    /// default to `results`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Full-size experiment (1,000 matrices × 10 data sets).
    #[arg(long, global = true)]
    pub paper_scale: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a trajectory from a parameter file or a random draw.
    Simulate {
        /// Parameter file (JSON).
        #[arg(long, conflicts_with = "dims")]
        params: Option<PathBuf>,
        /// Block sizes `d_I,d_H,d_X,d_Y` of a random instrumental VAR(1).
        #[arg(long, value_parser = parse_dims)]
        dims: Option<BlockLayout>,
        #[arg(long, default_value_t = 1_000)]
        len: usize,
    },
    /// Fit an estimator to a sample CSV.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        /// `civ_i`, `civ_ixy`, `naive` or `niv_<lags>`, optionally `@<coords>`.
        #[arg(long, default_value = "niv_3")]
        estimator: EstimatorSpec,
        /// Two-step weight with a Bartlett long-run covariance.
        #[arg(long)]
        efficient: bool,
        /// Also report a plug-in asymptotic covariance.
        #[arg(long)]
        covariance: bool,
    },
    /// Classify identifiability of a parameter file.
    Identify {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Predict `Y_{T+1}` under `do(X_T := x)` from a sample.
    Predict {
        #[arg(long)]
        data: PathBuf,
        /// Separate sample for the causal effect; `--data` when absent.
        #[arg(long)]
        effect_data: Option<PathBuf>,
        #[arg(long, default_value = "civ_ixy")]
        estimator: EstimatorSpec,
        /// Intervention value (one entry per `X` coordinate, comma separated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
    },
    /// Run one of the experiments.
    Experiment {
        /// consistency | lags_vs_instruments | delta_sweep |
        /// predict_under_intervention | obs_equivalence | identifiability_census
        id: ExperimentId,
    },
}

fn parse_dims(s: &str) -> std::result::Result<BlockLayout, String> {
    let v: Vec<usize> = s.split(',').map(|p| p.trim().parse::<usize>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        &[d_i, d_h, d_x, d_y] => Ok(BlockLayout::new(d_i, d_h, d_x, d_y)),
        _ => Err("expected four comma-separated block sizes".into()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))
}

fn read_sample(path: &Path) -> Result<TimeSeriesSample<f64>> {
    let file = fs::File::open(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(read_sample_csv(file)?)
}

fn read_params(path: &Path) -> Result<ParamFile> {
    Ok(ParamFile::from_json(&read_text(path)?)?)
}

/// Write `text` to `dir/name` when an output directory is given, otherwise
/// return it for stdout.
fn emit(out: Option<&Path>, name: &str, text: String) -> Result<String> {
    match out {
        None => Ok(text),
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, text)?;
            Ok(format!("{}\n", path.display()))
        }
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Run the parsed command; the returned text goes to stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Simulate { params, dims, len } => {
            let (file, drawn) = match (params, dims) {
                (Some(p), _) => (read_params(p)?, false),
                (None, Some(d)) => {
                    let spec = DrawConfig::default().spec(*d);
                    let m = experiments::draw_matrix(seed, &spec, 0)?;
                    (ParamFile::from_params(m.params()), true)
                }
                (None, None) => return Err(HarnessError::Config("simulate needs --params or --dims".into())),
            };
            let params = file.to_params::<f64>()?;
            let sample = params.simulate_with_rng(*len, &mut stream_rng(seed, stream_id(experiments::SAMPLE, 0, 0)))?;
            let mut buf = Vec::new();
            write_sample_csv(&sample, &mut buf)?;
            let mut text = emit(out, "sample.csv", String::from_utf8(buf).expect("csv is utf-8"))?;
            if drawn && out.is_some() {
                text += &emit(out, "params.json", file.to_json() + "\n")?;
            }
            Ok(text)
        }
        Command::Estimate { data, estimator, efficient, covariance } => {
            let sample = read_sample(data)?;
            let mut problem = ts_align(&sample, &estimator.alignment)?;
            if *efficient {
                problem = problem.with_weight(WeightChoice::Efficient { bandwidth: None });
            }
            if *covariance {
                problem = problem.with_asymptotic_cov(None);
            }
            let est = civ_fit(&problem)?;
            let spec = json!({ "estimator": estimator.name, "efficient": efficient, "T": sample.len() });
            let doc = est.to_json(spec, cli.seed);
            emit(out, "estimate.json", serde_json::to_string_pretty(&doc)? + "\n")
        }
        Command::Identify { params, tol } => {
            let m = InstrumentalVar1::new(read_params(params)?.to_params::<f64>()?)?;
            let report = is_identifiable_niv(&m, *tol)?;
            emit(out, "identifiability.json", serde_json::to_string_pretty(&report)? + "\n")
        }
        Command::Predict { data, effect_data, estimator, x, m, l } => {
            let sample = read_sample(data)?;
            let effect_sample = match effect_data {
                Some(p) => read_sample(p)?,
                None => sample.clone(),
            };
            let beta = fit_beta(&effect_sample, estimator)?;
            let predictor = fit_intervention_predictor(&beta, &sample, *m, *l)?;
            let xv = DMatrix::from_column_slice(x.len(), 1, x);
            let yhat = predict_from_sample(&predictor, &sample, sample.len(), &xv)?;
            let doc = json!({
                "estimator": estimator.name,
                "x": x,
                "prediction": yhat.iter().copied().collect::<Vec<f64>>(),
                "predictor": predictor.to_json(),
                "beta_hat": rows(&beta),
                "version": tsiv::VERSION,
            });
            emit(out, "prediction.json", serde_json::to_string_pretty(&doc)? + "\n")
        }
        Command::Experiment { id } => {
            let mut cfg = match &cli.config {
                Some(p) => ExperimentConfig::from_json(&read_text(p)?, Some(*id))?,
                None => ExperimentConfig::defaults(*id),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if cli.paper_scale {
                cfg = cfg.paper_scale();
            }
            let dir = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let report = experiments::run(&cfg, cli.workers)?;
            report.write(&dir)?;
            Ok(report.summary_json())
        }
    }
}
