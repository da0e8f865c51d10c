//! Seeded experiment harness for `mail-core`: TOML configs, sweep
//! execution over `(seed, budget)` pairs, CSV records, SVG plots and the
//! acceptance battery.

pub mod acceptance;
pub mod config;
mod error;
pub mod plot;
pub mod registry;
pub mod runner;
pub mod seed;

pub use config::ExperimentConfig;
pub use error::LabError;
pub use plot::{emit_plot, Metric};
pub use runner::{emit_csv, read_csv, run, RunRecord};
