//! Experiment runner for the `noma-fbl` library: config-driven sweeps, the
//! reference figure presets, cross-method validation and queue simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod presets;
pub mod queue;
pub mod report;
pub mod sweep;

pub use config::ControlOverrides;
pub use presets::figure_preset;
pub use queue::{QueueExperiment, QueueReport};
pub use report::{validate_report, Report};
pub use sweep::{read_csv, run_sweep, write_csv, ResultRow, SweepSpec, CSV_HEADER};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const VALIDATION_FAILED: u8 = 1;
    pub const CONFIG_OR_IO: u8 = 2;
}
