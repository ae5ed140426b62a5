//! Experiment runner behind the `tsiv` command-line tool: configuration,
//! deterministic seeding, parallel replication and CSV/JSON tables.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod stats;

pub use config::{EstimatorSpec, ExperimentConfig, ExperimentId, Family};
pub use error::{HarnessError, Result};
pub use experiments::run;
pub use output::{Meta, Report, Table};
