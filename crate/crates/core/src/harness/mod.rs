//! Experiment runner, regret accounting, sweeps, fits and result files.

pub mod config;
pub mod fit;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{Grid, InstanceDescriptor, RunConfig, SweepConfig};
pub use fit::{fit_log_slope, LogFit, MISFIT_THRESHOLD};
pub use output::{emit_results, summarize, Format, Summary};
pub use run::{regret_increment, run, run_observed, Checkpoint, RoundObserver, RunResult};
pub use sweep::{expand_grid, run_sweep, CellFailure, SweepOutcome};
