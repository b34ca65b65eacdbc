//! Experiment orchestration: configuration, single cases, sweeps over
//! `eps`, convergence metrics against the limit dynamics, weak-form
//! residuals, the identity suite and report files.

mod check;
mod config;
mod metrics;
mod plot;
mod run;
mod sweep;
mod weak;

use std::io;

use thiserror::Error;

use crate::diagnostics::DiagnosticsError;
use crate::equilibrium::EquilibriumError;
use crate::limit::LimitError;
use crate::pressure::PressureError;
use crate::regime::RegimeError;
use crate::solver::SolverError;
use crate::spectral::SpectralError;

pub use check::{identity_suite, IdentityCheck, IDENTITY_TOL};
pub use config::ExperimentPlan;
pub use metrics::{
    convergence_metrics, instant_metrics, metric_names, ConvergenceTracker, LimitSnapshot, MetricOptions,
    MetricRecord,
};
pub use plot::plot_loglog;
pub use run::{run_case, stepper_config, CaseSource, CaseSpec, MetricSeries, RunArtifact};
pub use sweep::{merge_records, run_sweep, sweep_cases, trends, write_outputs, CaseStatus, SweepReport, Trend};
pub use weak::{weak_records, weak_residual, WeakResidual, WeakResidualAccumulator};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Regime(#[from] RegimeError),
    #[error(transparent)]
    Pressure(#[from] PressureError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("case {case}: {source}")]
    Case { case: String, source: Box<HarnessError> },
    #[error("{} of {total} cases failed: {}", failed.len(), failed.join("; "))]
    SweepFailed { failed: Vec<String>, total: usize },
    #[error("plot: {0}")]
    Plot(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
