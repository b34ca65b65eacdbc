//! Analytical objects of the convergence argument evaluated on solver
//! states and trajectories: pressure remainder, cut-off wave system,
//! momentum decomposition, the slow vorticity quantity, oscillation fields,
//! convective splitting and uniform-bound monitoring.

mod bounds;
mod convective;
mod oscillation;
mod pressure_split;
mod report;
mod wave;

use thiserror::Error;

use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::solver::{FluidState, SolverError};
use crate::spectral::SpectralError;

pub use bounds::{
    bound_monitor, bound_snapshot, essential_mask, loglog_slope, sum_norm, BoundLedger, BoundRow,
    BoundSnapshot, SlopeCheck, SlopeFit, SumNorm, UniformCheck,
};
pub use convective::{convective_split, test_function_family, ConvectiveSplit, TestFunction, FAMILY_SIZE};
pub use oscillation::{
    borderline_identity, oscillation_fields, oscillation_residuals, BorderlineReport,
    OscillationFields, OscillationResiduals,
};
pub use pressure_split::{pi_decompose, PressureNorms, PressureSplit};
pub use report::{write_rows_csv, write_summary_json, DiagnosticRow};
pub use wave::{
    gamma_of, gamma_series, momentum_decomposition, regularize, wave_residual, wave_residual_fields, GammaReport,
    MomentumDecomposition, RegularizedState, ResidualSeries,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("non-positive density {value} at grid index {index}")]
    NonPositiveDensity { index: usize, value: f64 },
    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("snapshots are not uniformly spaced in time (spacing {first} vs {other})")]
    NonUniformSampling { first: f64, other: f64 },
    #[error("test function is not admissible: {0}")]
    BadTestFunction(String),
    #[error("cut-off index {m} outside the ladder range 0..={max}")]
    CutoffOutOfRange { m: i32, max: i32 },
    #[error("need at least two distinct positive values to fit a slope")]
    DegenerateFit,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("solver error: {0}")]
    Solver(SolverError),
}

impl From<SolverError> for DiagnosticsError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonPositiveDensity { index, value } => {
                DiagnosticsError::NonPositiveDensity { index, value }
            }
            other => DiagnosticsError::Solver(other),
        }
    }
}

/// Physical parameters shared by every diagnostic of one trajectory.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub regime: ScalingRegime,
    pub law: PressureLaw,
    pub mu: f64,
    pub eta: f64,
}

/// Uniform snapshot spacing of a trajectory with at least `needed` entries.
pub(crate) fn uniform_spacing(traj: &[FluidState], needed: usize) -> Result<f64, DiagnosticsError> {
    if traj.len() < needed {
        return Err(DiagnosticsError::InsufficientSamples { needed, got: traj.len() });
    }
    let first = traj[1].time - traj[0].time;
    for w in traj.windows(2) {
        let other = w[1].time - w[0].time;
        if !(first > 0.0) || (other - first).abs() > 1e-8 * first {
            return Err(DiagnosticsError::NonUniformSampling { first, other });
        }
    }
    Ok(first)
}
