//! Experiment orchestration: configuration, seeded replications, slope fits,
//! emission and the acceptance suites.

pub mod config;
pub mod precise;
pub mod emit;
pub mod run;
pub mod slope;
pub mod suites;

pub use config::{ExperimentConfig, Protocol};
pub use emit::{Format, TraceDocument, TraceRow};
pub use run::{run_bai, run_coverage, run_experiment, BaiSummary, CoverageSummary, RegretTrace};
pub use slope::{fit_slope, SlopeFit};
