//! Seeded ill-prepared initial data: band-limited, spatially localised, no
//! projection onto the slow manifold.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FluidState, SolverError};
use crate::equilibrium::equilibrium_density;
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::spectral::ops::project_component;
use crate::spectral::{Field, Grid, Parity, Spectrum, VELOCITY_PARITY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub seed: u64,
    /// `L^2` norm of both `rho1_0` and `u_0`
    pub amplitude: f64,
    /// largest wavenumber magnitude present
    pub band: f64,
    /// width of the horizontal Gaussian envelope as a fraction of `Lh`
    pub window: f64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        InitialDataSpec { seed: 7, amplitude: 1.0, band: 4.0, window: 0.125 }
    }
}

fn kmag(grid: &Grid, idx: usize) -> f64 {
    let k = grid.wavevector(idx);
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

fn truncate(s: &mut Spectrum, band: f64) {
    let g = Arc::clone(s.grid());
    s.apply_multiplier(|idx| if kmag(&g, idx) <= band { 1.0 } else { 0.0 });
}

/// One random scalar: random coefficients inside the band, a centred
/// horizontal Gaussian envelope, truncation back to the band and a parity
/// projection.
fn random_scalar(grid: &Arc<Grid>, spec: &InitialDataSpec, stream: u64, parity: Parity) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let coeffs: Vec<Complex64> = (0..grid.spec_len())
        .map(|idx| {
            let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if kmag(grid, idx) <= spec.band {
                Complex64::new(a, b)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut data = grid.inverse(&coeffs);
    let (lh, sigma) = (grid.lh(), spec.window * grid.lh());
    let nv = grid.nv();
    for ix in 0..grid.nh() {
        for iy in 0..grid.nh() {
            let (x, y) = (grid.x(ix) - 0.5 * lh, grid.x(iy) - 0.5 * lh);
            let w = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            let col = grid.index(ix, iy, 0);
            for v in &mut data[col..col + nv] {
                *v *= w;
            }
        }
    }
    let mut s = Spectrum::new(grid, vec![grid.forward(&data)], vec![parity]);
    truncate(&mut s, spec.band);
    let mut out = s.to_field().into_comps().remove(0);
    project_component(&mut out, nv, parity);
    out
}

/// Ill-prepared data `rho_0 = rho~ + eps^m rho1_0`, `V_0 = rho_0 u_0`.
///
/// The shapes depend on the seed and the grid only; `eps` enters through the
/// static profile and the `eps^m` factor.
pub fn initial_data(
    regime: &ScalingRegime,
    law: &PressureLaw,
    grid: &Arc<Grid>,
    spec: &InitialDataSpec,
) -> Result<FluidState, SolverError> {
    let kh_nyq = grid.kh_values()[grid.nh() / 2].abs();
    let kz_nyq = grid.kz_values()[grid.nzc() - 1];
    let limit = 2.0 / 3.0 * kh_nyq.min(kz_nyq);
    if !(spec.band > 0.0 && spec.band <= limit) {
        return Err(SolverError::Resolution(format!(
            "band {} outside (0, {limit:.3}] (two thirds of the Nyquist wavenumber)",
            spec.band
        )));
    }
    let profile = Arc::new(equilibrium_density(regime, law, grid)?);

    let mut rho1 = random_scalar(grid, spec, 0, Parity::Even);
    let mean = rho1.iter().sum::<f64>() / rho1.len() as f64;
    for v in &mut rho1 {
        *v -= mean;
    }
    let mut rho1 = Field::scalar(grid, rho1, Parity::Even);
    let norm = rho1.l2_norm();
    if norm > 0.0 {
        rho1.scale(spec.amplitude / norm);
    }

    let comps = (0..3)
        .map(|c| random_scalar(grid, spec, 1 + c as u64, VELOCITY_PARITY[c]))
        .collect();
    let mut u = Field::new(grid, comps, VELOCITY_PARITY.to_vec());
    let norm = u.l2_norm();
    if norm > 0.0 {
        u.scale(spec.amplitude / norm);
    }

    let mut state = FluidState::new(rho1, Field::zeros(grid, &VELOCITY_PARITY), profile);
    let rho = state.density(regime.mach());
    super::check_positive(rho.comp(0))?;
    state.momentum = u.times_scalar(&rho).with_parities(&VELOCITY_PARITY);
    Ok(state)
}
