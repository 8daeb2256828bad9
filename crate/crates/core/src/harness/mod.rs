//! Ensemble runs, normalized statistics and distributional reports, plus the
//! deterministic identity suite and the per-path representation studies.

pub mod config;
pub mod ensemble;
pub mod report;

pub use config::ExperimentConfig;
pub use ensemble::{process_path, run_ensemble, run_ensemble_to_file, PathRecord};
pub use report::{clt_report, normalize_l2, normalize_l3, sweep, Check, Report, ReportEntry, Thresholds};
pub mod studies;
pub mod identities;
