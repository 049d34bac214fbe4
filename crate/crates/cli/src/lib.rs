//! Experiment driver for the beta-momentum family: runs configured method
//! grids through the energy, bound, deviation and phase checks, and writes
//! CSV artifacts, a pass/fail summary and matplotlib scripts.

// `!(x > 0.0)` is used deliberately so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plots;
pub mod runner;
pub mod sweep;

pub use config::{BetaSpec, CheckKind, ConfigError, ExperimentConfig};
pub use plots::{emit_plots, PlotReport};
pub use runner::{resolve_output_dir, run_experiment, CellRecord, Outcome, RunSummary, Status};
pub use sweep::{parse_grid, phase_rows, regime_flips, write_phase_csv, PhaseRow};

/// Environment variable naming the root under which run outputs are placed.
pub const OUTPUT_ROOT_ENV: &str = "BETAMOMENTUM_OUT";
