//! Experiment runner for `poreflow-core`: TOML configs, CSV/JSON output and
//! the scenarios behind the `poreflow` command.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod io;
pub mod scenarios;

pub use config::{ExperimentConfig, Scenario};
pub use scenarios::{run_scenario, Report};
