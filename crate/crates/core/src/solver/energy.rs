//! Energy balance `E(t) + int_0^t int S : grad u <= E(0)` along a trajectory.

use serde::Serialize;

use super::{FluidState, SolverError};
use crate::equilibrium::relative_energy;
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyRecord {
    pub time: f64,
    /// `1/2 int rho |u|^2`
    pub kinetic: f64,
    /// `eps^{-2m} int E(rho, rho~)`
    pub internal: f64,
    pub dissipated: f64,
    /// `kinetic + internal + dissipated - E(0)`; non-positive for the exact flow
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyLedger {
    pub records: Vec<EnergyRecord>,
    pub initial_energy: f64,
    /// largest defect over the trajectory
    pub max_defect: f64,
    /// largest `|defect|` over the trajectory
    pub max_abs_defect: f64,
}

/// Kinetic and internal energy of a state.
pub fn energy_of(state: &FluidState, regime: &ScalingRegime, law: &PressureLaw) -> Result<(f64, f64), SolverError> {
    let mach = regime.mach();
    let rho = state.density(mach);
    super::check_positive(rho.comp(0))?;
    let dv = state.grid().cell_volume();
    let kinetic = 0.5
        * dv
        * (0..rho.comp(0).len())
            .map(|i| {
                let v2: f64 = (0..3).map(|c| state.momentum.comp(c)[i].powi(2)).sum();
                v2 / rho.comp(0)[i]
            })
            .sum::<f64>();
    let internal = relative_energy(&rho, &state.profile, law)? / (mach * mach);
    Ok((kinetic, internal))
}

pub fn energy_report(
    trajectory: &[FluidState],
    regime: &ScalingRegime,
    law: &PressureLaw,
) -> Result<EnergyLedger, SolverError> {
    let mut records = Vec::with_capacity(trajectory.len());
    let mut initial = None;
    for s in trajectory {
        let (kinetic, internal) = energy_of(s, regime, law)?;
        let e0 = *initial.get_or_insert(kinetic + internal - s.dissipated);
        records.push(EnergyRecord {
            time: s.time,
            kinetic,
            internal,
            dissipated: s.dissipated,
            defect: kinetic + internal + s.dissipated - e0,
        });
    }
    let max_defect = records.iter().map(|r| r.defect).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_defect = records.iter().map(|r| r.defect.abs()).fold(0.0, f64::max);
    Ok(EnergyLedger { records, initial_energy: initial.unwrap_or(0.0), max_defect, max_abs_defect })
}
