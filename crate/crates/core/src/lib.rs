//! Instrumental-variable estimation of direct causal effects in confounded
//! vector-autoregressive time series.
//!
//! Numeric code is generic over [`Real`] (`f32`, `f64`); total causal effects
//! accept any ring, including exact rationals. The `*64` aliases below fix
//! the scalar to `f64`.

pub mod error;
pub mod estimators;
pub mod graph;
pub mod identifiability;
pub mod linalg;
pub mod prediction;
pub mod rng;
pub mod scm_iid;
pub mod scalar;
pub mod var_model;

pub use error::{Error, Result};
pub use scalar::Real;

/// Library version recorded in exported artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type VarParameters64 = var_model::VarParameters<f64>;
pub type VarParameters32 = var_model::VarParameters<f32>;
pub type InstrumentalVar64 = var_model::InstrumentalVar1<f64>;
pub type TimeSeriesSample64 = var_model::TimeSeriesSample<f64>;
pub type InstrumentalVar32 = var_model::InstrumentalVar1<f32>;
pub type TimeSeriesSample32 = var_model::TimeSeriesSample<f32>;
pub type IvProblem64 = estimators::IvProblem<f64>;
pub type IvProblem32 = estimators::IvProblem<f32>;
pub type Estimate64 = estimators::Estimate<f64>;
pub type Estimate32 = estimators::Estimate<f32>;
pub type LinearScm64 = scm_iid::LinearScm<f64>;
pub type ReducedBlocks64 = identifiability::ReducedBlocks<f64>;
pub type InterventionPredictor64 = prediction::InterventionPredictor<f64>;
