//! Experiment configuration: per-experiment defaults, JSON overrides, hashing.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tsiv::estimators::{AlignmentSpec, CivConditioning};
use tsiv::var_model::{BlockLayout, RandomA2Spec};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Consistency,
    LagsVsInstruments,
    DeltaSweep,
    PredictUnderIntervention,
    ObsEquivalence,
    IdentifiabilityCensus,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Consistency,
        ExperimentId::LagsVsInstruments,
        ExperimentId::DeltaSweep,
        ExperimentId::PredictUnderIntervention,
        ExperimentId::ObsEquivalence,
        ExperimentId::IdentifiabilityCensus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Consistency => "consistency",
            ExperimentId::LagsVsInstruments => "lags_vs_instruments",
            ExperimentId::DeltaSweep => "delta_sweep",
            ExperimentId::PredictUnderIntervention => "predict_under_intervention",
            ExperimentId::ObsEquivalence => "obs_equivalence",
            ExperimentId::IdentifiabilityCensus => "identifiability_census",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment id `{s}`")))
    }
}

/// Named time-series estimator.
///
/// Names: `civ_i`, `civ_ixy`, `naive`, `niv_<lags>`, each optionally
/// followed by `@<c>+<c>…` restricting the instrument coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EstimatorSpec {
    pub name: String,
    pub alignment: AlignmentSpec,
}

impl FromStr for EstimatorSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HarnessError::Config(format!("unknown estimator `{s}`"));
        let (base, coords) = match s.split_once('@') {
            Some((b, c)) => {
                let coords = c.split('+').map(|v| v.parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
                (b, Some(coords))
            }
            None => (s, None),
        };
        let mut alignment = match base {
            "civ_i" => AlignmentSpec::civ(CivConditioning::Instrument),
            "civ_ixy" => AlignmentSpec::civ(CivConditioning::InstrumentAndPast),
            "naive" => AlignmentSpec::naive(),
            _ => {
                let lags: usize = base.strip_prefix("niv_").and_then(|l| l.parse().ok()).ok_or_else(bad)?;
                if lags == 0 {
                    return Err(bad());
                }
                AlignmentSpec::niv(lags)
            }
        };
        if let Some(c) = coords {
            if c.is_empty() {
                return Err(bad());
            }
            alignment = alignment.with_instruments(c);
        }
        Ok(Self { name: s.to_string(), alignment })
    }
}

impl TryFrom<String> for EstimatorSpec {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimatorSpec> for String {
    fn from(e: EstimatorSpec) -> Self {
        e.name
    }
}

/// Distribution of random coefficient matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawConfig {
    pub low: f64,
    pub high: f64,
    pub margin: f64,
    /// Magnitude range of the confounding entries, when it differs.
    pub confounding: Option<(f64, f64)>,
    /// Noise variances; unit variances when absent.
    pub noise_diag: Option<Vec<f64>>,
}

impl Default for DrawConfig {
    fn default() -> Self {
        Self { low: 0.1, high: 0.9, margin: 0.1, confounding: None, noise_diag: None }
    }
}

impl DrawConfig {
    pub fn spec(&self, layout: BlockLayout) -> RandomA2Spec {
        RandomA2Spec {
            low: self.low,
            high: self.high,
            margin: self.margin,
            confounding: self.confounding,
            noise_diag: self.noise_diag.clone(),
            ..RandomA2Spec::new(layout)
        }
    }
}

/// Matrix family of the identifiability census.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Every admissible entry drawn.
    Generic,
    /// `α_XX = -0.6 I` with two `X` coordinates and no feedback from `Y`.
    RepeatedEigenvalue,
    /// Scalar `X` with `α_XX = α_YY`.
    EqualDiagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsEquivalenceParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub max_lag: usize,
}

impl Default for ObsEquivalenceParams {
    fn default() -> Self {
        Self { a: 0.5, b: 0.7, c: 0.3, max_lag: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub dims: BlockLayout,
    pub n_matrices: usize,
    pub replicates: usize,
    pub sample_sizes: Vec<usize>,
    pub seed: u64,
    pub estimators: Vec<EstimatorSpec>,
    pub output: Option<PathBuf>,
    pub draw: DrawConfig,
    /// Offsets added to the second diagonal entry of `α_XX = -0.6 I`.
    pub deltas: Vec<f64>,
    /// Interventions `do(X_T := n σ)` for these `n`.
    pub intervention_multiples: Vec<f64>,
    /// Lags of `X` and `Y` in the prediction regression.
    pub predictor_m: usize,
    pub predictor_l: usize,
    pub obs: ObsEquivalenceParams,
    pub family: Family,
    /// Relative singular-value cutoff for identifiability.
    pub tol: f64,
}

fn estimators(names: &[&str]) -> Vec<EstimatorSpec> {
    names.iter().map(|n| n.parse().expect("built-in estimator name")).collect()
}

impl ExperimentConfig {
    /// Desk-scale defaults.
    pub fn defaults(id: ExperimentId) -> Self {
        let base = Self {
            id,
            dims: BlockLayout::new(3, 1, 2, 1),
            n_matrices: 100,
            replicates: 5,
            sample_sizes: vec![300, 1_000, 3_000, 10_000],
            seed: 0,
            estimators: estimators(&["civ_i", "civ_ixy", "niv_1", "niv_3"]),
            output: None,
            draw: DrawConfig::default(),
            deltas: vec![0.0, 0.01, 0.1, 0.5, 1.0],
            intervention_multiples: vec![1.0, 5.0],
            predictor_m: 2,
            predictor_l: 1,
            obs: ObsEquivalenceParams::default(),
            family: Family::Generic,
            tol: 1e-8,
        };
        match id {
            ExperimentId::Consistency => base,
            ExperimentId::LagsVsInstruments => Self {
                sample_sizes: vec![2_000],
                estimators: estimators(&["niv_6@0", "niv_2"]),
                ..base
            },
            ExperimentId::DeltaSweep => Self {
                dims: BlockLayout::new(1, 1, 2, 1),
                sample_sizes: vec![100, 1_000, 10_000, 50_000],
                estimators: estimators(&["niv_3"]),
                ..base
            },
            ExperimentId::PredictUnderIntervention => Self {
                dims: BlockLayout::new(1, 1, 1, 1),
                replicates: 100,
                sample_sizes: vec![3_000],
                estimators: estimators(&["civ_ixy", "niv_2"]),
                draw: DrawConfig { confounding: Some((0.5, 0.9)), ..DrawConfig::default() },
                ..base
            },
            ExperimentId::ObsEquivalence => {
                Self { dims: BlockLayout::new(0, 2, 1, 1), n_matrices: 1, replicates: 1, sample_sizes: vec![1], ..base }
            }
            ExperimentId::IdentifiabilityCensus => Self {
                dims: BlockLayout::new(1, 1, 2, 1),
                n_matrices: 1_000,
                replicates: 1,
                sample_sizes: vec![1],
                ..base
            },
        }
    }

    /// Restore the full-size study: 1,000 matrices with 10 data sets each
    /// (the prediction study keeps 100 × 100).
    pub fn paper_scale(mut self) -> Self {
        match self.id {
            ExperimentId::Consistency | ExperimentId::LagsVsInstruments | ExperimentId::DeltaSweep => {
                self.n_matrices = 1_000;
                self.replicates = 10;
            }
            ExperimentId::PredictUnderIntervention => {
                self.n_matrices = 100;
                self.replicates = 100;
            }
            ExperimentId::IdentifiabilityCensus => self.n_matrices = self.n_matrices.max(1_000),
            ExperimentId::ObsEquivalence => {}
        }
        self
    }

    /// Defaults of the experiment named in `json` (or `id`), overridden
    /// key by key by the JSON object.
    pub fn from_json(json: &str, id: Option<ExperimentId>) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| HarnessError::Config(format!("config is not valid JSON: {e}")))?;
        let obj = value.as_object().ok_or_else(|| HarnessError::Config("config must be a JSON object".into()))?;
        let named = match obj.get("id") {
            Some(v) => Some(
                v.as_str().ok_or_else(|| HarnessError::Config("`id` must be a string".into()))?.parse::<ExperimentId>()?,
            ),
            None => None,
        };
        let id = match (named, id) {
            (Some(a), Some(b)) if a != b => {
                return Err(HarnessError::Config(format!("config is for `{a}` but `{b}` was requested")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(HarnessError::Config("config needs an `id`".into())),
        };
        let mut merged = serde_json::to_value(Self::defaults(id))?;
        let target = merged.as_object_mut().expect("config serializes to an object");
        for (k, v) in obj {
            if !target.contains_key(k) {
                return Err(HarnessError::Config(format!("unknown config key `{k}`")));
            }
            target.insert(k.clone(), v.clone());
        }
        let cfg: Self = serde_json::from_value(merged).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(HarnessError::Config(m));
        if self.n_matrices == 0 || self.replicates == 0 {
            return err("n_matrices and replicates must be at least 1".into());
        }
        if self.n_matrices >= 1 << 24 || self.replicates >= 1 << 24 {
            return err("n_matrices and replicates must be below 2^24".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return err("sample_sizes must be a non-empty list of positive lengths".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return err("tol must lie in (0, 1)".into());
        }
        let d = self.dims;
        let estimating = matches!(
            self.id,
            ExperimentId::Consistency
                | ExperimentId::LagsVsInstruments
                | ExperimentId::DeltaSweep
                | ExperimentId::PredictUnderIntervention
        );
        if estimating {
            if self.estimators.is_empty() {
                return err("at least one estimator is required".into());
            }
            if d.d_i == 0 || d.d_x == 0 || d.d_y == 0 {
                return err("d_I, d_X and d_Y must be positive".into());
            }
            for e in &self.estimators {
                if e.alignment.instruments.as_ref().is_some_and(|c| c.iter().any(|&k| k >= d.d_i)) {
                    return err(format!("estimator `{}` uses an instrument outside d_I = {}", e.name, d.d_i));
                }
            }
        }
        match self.id {
            ExperimentId::DeltaSweep => {
                if d.d_x != 2 {
                    return err("the Delta sweep needs d_X = 2".into());
                }
                if self.deltas.is_empty() || self.deltas.iter().any(|v| !v.is_finite()) {
                    return err("deltas must be a non-empty list of finite numbers".into());
                }
            }
            ExperimentId::PredictUnderIntervention => {
                if d.d_x != 1 || d.d_y != 1 {
                    return err("prediction under intervention needs d_X = d_Y = 1".into());
                }
                if self.intervention_multiples.is_empty() || self.intervention_multiples.iter().any(|v| !v.is_finite()) {
                    return err("intervention_multiples must be a non-empty list of finite numbers".into());
                }
            }
            ExperimentId::ObsEquivalence => {
                let o = &self.obs;
                if !(o.a.abs() < 1.0) || !o.b.is_finite() || !o.c.is_finite() {
                    return err(format!("obs: need |a| < 1 and finite b, c (a = {})", o.a));
                }
            }
            ExperimentId::IdentifiabilityCensus => {
                if d.d_i == 0 || d.d_x == 0 || d.d_y != 1 {
                    return err("the census needs d_I, d_X >= 1 and d_Y = 1".into());
                }
                match self.family {
                    Family::RepeatedEigenvalue if d.d_x != 2 => {
                        return err("the repeated-eigenvalue family needs d_X = 2".into())
                    }
                    Family::EqualDiagonal if d.d_x != 1 => return err("the equal-diagonal family needs d_X = 1".into()),
                    _ => {}
                }
            }
            _ => {}
        }
        if let Some(g) = &self.draw.noise_diag {
            if g.len() != d.dim() {
                return err("draw.noise_diag length differs from the state dimension".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON with the output path removed, as 16 hex
    /// digits.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}
