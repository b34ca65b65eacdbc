//! Low Mach, low Rossby, low Froude limits of rotating stratified compressible flow.

pub mod diagnostics;
pub mod equilibrium;
pub mod gravity;
pub mod harness;
pub mod limit;
pub mod pressure;
pub mod regime;
pub mod solver;
pub mod spectral;
