//! Experiment runner: configuration, deterministic seeding, orchestration
//! and report emission.

pub mod config;
pub mod report;
pub mod runner;
pub mod stream;

pub use config::{ExperimentConfig, ExperimentKind};
pub use report::{emit_report, Plot, Report, Series};
pub use runner::{build_report, clamped_radii, requested_workers, run_experiment, RunOutput};
pub use stream::derive_substream;
