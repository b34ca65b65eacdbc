//! Time integration of the perturbation variables `(rho1, V)`.
//!
//! The fast acoustic and Coriolis terms are applied through an exact per-mode
//! exponential; every other term is advanced explicitly and combined with the
//! fast part by Strang splitting.

mod energy;
mod initial;
mod propagator;
mod sources;
mod stepper;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::{EquilibriumError, StaticProfile};
use crate::spectral::{Field, Parity, SpectralError, VELOCITY_PARITY};

pub use energy::{energy_of, energy_report, EnergyLedger, EnergyRecord};
pub use initial::{initial_data, InitialDataSpec};
pub use propagator::{propagate_linear, ModePropagator};
pub use sources::{assemble_sources, SourceEvaluator, Sources};
pub use stepper::{stability_bound, step, PrimitiveSolver};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("non-positive density {value} at grid index {index}")]
    NonPositiveDensity { index: usize, value: f64 },
    #[error("solution norm {norm} exceeded the ceiling at t = {time}")]
    Blowup { time: f64, norm: f64 },
    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Order of the Strang composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitOrder {
    /// half source step, full fast step, half source step
    SourceOuter,
    /// half fast step, full source step, half fast step
    StiffOuter,
}

/// Discretisation of the slow momentum tendency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceForm {
    /// Pressure as `rho grad h` with skew-symmetric convection; the
    /// semi-discrete energy balance holds exactly.
    Energy,
    /// `f + eps^{m-2n} g` with conservative convection and `g` built from the
    /// pressure remainder, so that `g^h` is an exact horizontal gradient.
    Wave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub order: SplitOrder,
    pub form: SourceForm,
    pub dealias: bool,
    /// shear viscosity
    pub mu: f64,
    /// bulk viscosity
    pub eta: f64,
    pub c_stab: f64,
    /// largest admissible `L^2` norm of `(rho1, V)`
    pub ceiling: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            t_end: 1.0,
            order: SplitOrder::SourceOuter,
            form: SourceForm::Energy,
            dealias: false,
            mu: 1e-2,
            eta: 0.0,
            c_stab: 0.5,
            ceiling: 1e8,
        }
    }
}

/// Density perturbation and momentum at one instant.
#[derive(Debug, Clone)]
pub struct FluidState {
    /// `(rho - rho~) / eps^m`, even in `x3`
    pub rho1: Field,
    /// `V = rho u`
    pub momentum: Field,
    pub profile: Arc<StaticProfile>,
    pub time: f64,
    /// accumulated `int_0^t int S(grad u) : grad u`
    pub dissipated: f64,
}

impl FluidState {
    pub fn new(rho1: Field, momentum: Field, profile: Arc<StaticProfile>) -> FluidState {
        assert_eq!(rho1.rank(), 1);
        assert_eq!(momentum.rank(), 3);
        assert!(rho1.same_grid(&momentum).is_ok());
        FluidState { rho1, momentum, profile, time: 0.0, dissipated: 0.0 }
    }

    /// The static state itself.
    pub fn equilibrium(grid: &Arc<crate::spectral::Grid>, profile: Arc<StaticProfile>) -> FluidState {
        FluidState::new(
            Field::zeros(grid, &[Parity::Even]),
            Field::zeros(grid, &VELOCITY_PARITY),
            profile,
        )
    }

    pub fn grid(&self) -> &Arc<crate::spectral::Grid> {
        self.rho1.grid()
    }

    /// `rho = rho~ + mach * rho1`.
    pub fn density(&self, mach: f64) -> Field {
        let nv = self.grid().nv();
        let rt = &self.profile.rho_tilde;
        let data = self
            .rho1
            .comp(0)
            .iter()
            .enumerate()
            .map(|(i, r)| rt[i % nv] + mach * r)
            .collect();
        Field::scalar(self.grid(), data, Parity::Even)
    }

    /// `u = V / rho`, failing on non-positive density.
    pub fn velocity(&self, mach: f64) -> Result<Field, SolverError> {
        let rho = self.density(mach);
        check_positive(rho.comp(0))?;
        let inv = rho.map(|v| 1.0 / v);
        Ok(self.momentum.times_scalar(&inv).with_parities(&VELOCITY_PARITY))
    }

    /// `int (rho - rho~) dx`.
    pub fn mass_defect(&self, mach: f64) -> f64 {
        mach * self.rho1.integrals()[0]
    }
}

pub(crate) fn check_positive(rho: &[f64]) -> Result<(), SolverError> {
    match rho.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(SolverError::NonPositiveDensity { index, value: rho[index] }),
        None => Ok(()),
    }
}
