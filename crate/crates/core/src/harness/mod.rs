//! Experiment harness: transfer-benefit comparisons, equivariance sweeps,
//! and report emission.
//!
//! [`run_transfer_experiment`] repeatedly samples a family of related tasks,
//! fits a target task under several strategies at an equal optimization
//! budget, and scores each against the noiseless truth. The strategies:
//!
//! * `scratch`: every coefficient optimized from zero;
//! * `leaf`: invariant coefficients frozen at values recovered by
//!   multitask fitting on the source tasks, only leaf coefficients
//!   optimized;
//! * `leaf-true`: like `leaf` but frozen at the exact invariant values;
//! * `similarity`: all coefficients optimized, warm-started from the
//!   fitted parameters of the nearest source task.
//!
//! Everything is deterministic: a seed fixes all sampling, trials have
//! precomputed per-trial seeds, and reports serialize with full float
//! precision, so equal configurations give byte-identical output
//! regardless of thread count.

mod config;
mod equivariance;
mod report;
mod svg;
mod transfer;

pub use config::{ConfigError, ExperimentConfig, Preset, Strategy};
pub use equivariance::{
    run_equivariance_suite, EquivCaseRow, EquivSuiteConfig, EquivSuiteReport,
};
pub use report::{emit_report, ReportFormat};
pub use transfer::{
    run_transfer_experiment, Aggregates, StrategyCurve, StrategyRow, StrategyStat,
    TransferReport, TrialRecord,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fit(#[from] crate::learning::FitError),
    #[error(transparent)]
    Group(#[from] crate::groups::GroupError),
    #[error(transparent)]
    Task(#[from] crate::taskspace::TaskError),
    #[error(transparent)]
    Pendulum(#[from] crate::pendulum::PendulumError),
    #[error("failed to write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to serialize report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("worker thread panicked")]
    WorkerPanicked,
}
