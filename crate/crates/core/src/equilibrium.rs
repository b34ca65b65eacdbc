//! Static equilibria `H'(rho~) = eps^{2(m-n)} G + H'(1)` and the relative energy.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::gravity::GravityPotential;
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::spectral::{Field, Grid, Parity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("equilibrium density leaves (0, inf) at x3 = {x3} (eps too large for this law)")]
    NonPositiveDensity { x3: f64 },
    #[error("negative density {value} at grid index {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("root finder did not converge for forcing {forcing}")]
    NoConvergence { forcing: f64 },
}

/// How the equilibrium equation is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumMethod {
    /// Closed form when the law has one, root finder otherwise.
    Auto,
    /// Always use the safeguarded Newton iteration.
    RootFinder,
}

/// Static density profile `rho~(x3)` and its rescaled deviation.
#[derive(Debug, Clone, Serialize)]
pub struct StaticProfile {
    /// `rho~` at each vertical grid level
    pub rho_tilde: Vec<f64>,
    /// `(rho~ - 1) / eps^{2(m-n)}` at each vertical grid level
    pub r_tilde: Vec<f64>,
    /// grid minimum of `rho~`
    pub rho_star: f64,
    /// `eps^{2(m-n)}`
    pub strat: f64,
    pub z: Vec<f64>,
}

const NEWTON_TOL: f64 = 1e-14;

/// Solves `H'(rho) - H'(1) = forcing` with Newton steps safeguarded by bisection.
pub fn solve_enthalpy(law: &PressureLaw, forcing: f64) -> Option<f64> {
    let f = |rho: f64| law.dh_increment(1.0, rho - 1.0) - forcing;
    let tol = NEWTON_TOL * forcing.abs().max(1.0);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if f(1.0) < 0.0 {
        lo = 1.0;
        hi = 2.0;
        let mut tries = 0;
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            tries += 1;
            if tries > 200 {
                return None;
            }
        }
    } else if f(f64::MIN_POSITIVE) > 0.0 {
        // H' is bounded below near vacuum and the target lies under that bound
        return None;
    }
    let mut x = (1.0 + forcing).clamp(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo));
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= tol {
            return Some(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / law.d2h(x);
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 4.0 * f64::EPSILON * x {
            return Some(x);
        }
        x = next;
    }
    None
}

pub fn equilibrium_density(
    regime: &ScalingRegime,
    law: &PressureLaw,
    grid: &Grid,
) -> Result<StaticProfile, EquilibriumError> {
    equilibrium_density_with(regime, law, grid, EquilibriumMethod::Auto)
}

pub fn equilibrium_density_with(
    regime: &ScalingRegime,
    law: &PressureLaw,
    grid: &Grid,
    method: EquilibriumMethod,
) -> Result<StaticProfile, EquilibriumError> {
    let gravity = GravityPotential;
    let strat = regime.strat();
    let z = grid.z_coords();
    let mut rho_tilde = Vec::with_capacity(z.len());
    for &x3 in &z {
        let forcing = strat * gravity.value(x3);
        let closed = match method {
            EquilibriumMethod::Auto => law.equilibrium_closed_form(forcing),
            EquilibriumMethod::RootFinder => None,
        };
        let rho = match closed {
            Some(r) => r,
            None if method == EquilibriumMethod::Auto
                && matches!(law, PressureLaw::Gamma(_)) =>
            {
                return Err(EquilibriumError::NonPositiveDensity { x3 })
            }
            None => solve_enthalpy(law, forcing)
                .ok_or(EquilibriumError::NonPositiveDensity { x3 })?,
        };
        if !(rho > 0.0) {
            return Err(EquilibriumError::NonPositiveDensity { x3 });
        }
        rho_tilde.push(rho);
    }
    let r_tilde = rho_tilde.iter().map(|r| (r - 1.0) / strat).collect();
    let rho_star = rho_tilde.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StaticProfile { rho_tilde, r_tilde, rho_star, strat, z })
}

impl StaticProfile {
    /// `rho~` broadcast to a full grid field.
    pub fn rho_tilde_field(&self, grid: &Arc<Grid>) -> Field {
        broadcast(grid, &self.rho_tilde)
    }

    pub fn r_tilde_field(&self, grid: &Arc<Grid>) -> Field {
        broadcast(grid, &self.r_tilde)
    }

    /// `max |rho~ - 1|`.
    pub fn deviation_sup(&self) -> f64 {
        self.rho_tilde.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max |rho~ d3(H'(rho~) - eps^{2(m-n)} G)|`: the force balance
    /// `grad p(rho~) - eps^{2(m-n)} rho~ grad G` evaluated through the
    /// identity `grad p = rho grad H'` with spectral differentiation.
    pub fn equilibrium_residual(&self, law: &PressureLaw, grid: &Grid) -> f64 {
        let gravity = GravityPotential;
        let potential: Vec<f64> = self
            .rho_tilde
            .iter()
            .zip(&self.z)
            .map(|(&r, &z)| law.dh_increment(1.0, r - 1.0) - self.strat * gravity.value(z))
            .collect();
        let d = grid.vertical_derivative(&potential);
        d.iter()
            .zip(&self.rho_tilde)
            .map(|(a, r)| (a * r).abs())
            .fold(0.0, f64::max)
    }

    /// Same balance with `d3 p(rho~)` and `d3 G` differentiated separately.
    /// Both profiles have kinks at the symmetry planes, so this version
    /// carries Gibbs errors and is reported for comparison only.
    pub fn equilibrium_residual_direct(&self, law: &PressureLaw, grid: &Grid) -> f64 {
        let gravity = GravityPotential;
        let p: Vec<f64> = self.rho_tilde.iter().map(|&r| law.p(r)).collect();
        let g: Vec<f64> = self.z.iter().map(|&z| gravity.value(z)).collect();
        let dp = grid.vertical_derivative(&p);
        let dg = grid.vertical_derivative(&g);
        dp.iter()
            .zip(&dg)
            .zip(&self.rho_tilde)
            .map(|((a, b), r)| (a - self.strat * r * b).abs())
            .fold(0.0, f64::max)
    }
}

/// Broadcasts a vertical profile to every column.
pub fn broadcast(grid: &Arc<Grid>, profile: &[f64]) -> Field {
    let nv = grid.nv();
    assert_eq!(profile.len(), nv);
    let mut data = vec![0.0; grid.len()];
    for col in data.chunks_mut(nv) {
        col.copy_from_slice(profile);
    }
    Field::scalar(grid, data, Parity::Even)
}

/// `int E(rho, rho~) dx`.
pub fn relative_energy(
    rho: &Field,
    profile: &StaticProfile,
    law: &PressureLaw,
) -> Result<f64, EquilibriumError> {
    let nv = rho.grid().nv();
    let data = rho.comp(0);
    let mut total = 0.0;
    for (i, &r) in data.iter().enumerate() {
        if r < 0.0 {
            return Err(EquilibriumError::NegativeDensity { index: i, value: r });
        }
        total += law.relative_energy_density(r, profile.rho_tilde[i % nv]);
    }
    Ok(total * rho.grid().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::MixedPolytrope;
    use crate::regime::validate_regime;

    #[test]
    fn quadratic_law_closed_form() {
        let law = PressureLaw::gamma_law(2.0).unwrap();
        // eps^{2(m-n)} = 0.1 with G(0.5) = -0.5
        let rho = law.equilibrium_closed_form(0.1 * -0.5).unwrap();
        assert!((rho - 0.95).abs() < 1e-15);
    }

    #[test]
    fn root_finder_agrees_with_closed_form() {
        let law = PressureLaw::gamma_law(1.6).unwrap();
        let expected = 0.94f64.powf(1.0 / 0.6);
        let closed = law.equilibrium_closed_form(-0.1).unwrap();
        let newton = solve_enthalpy(&law, -0.1).unwrap();
        assert!((closed - expected).abs() < 1e-15);
        assert!((newton - expected).abs() < 1e-13);
    }

    #[test]
    fn root_finder_rejects_unreachable_forcing() {
        let law = PressureLaw::gamma_law(2.0).unwrap();
        // H'(rho) - H'(1) = rho - 1 >= -1
        assert!(solve_enthalpy(&law, -1.5).is_none());
        assert!(law.equilibrium_closed_form(-1.5).is_none());
    }

    #[test]
    fn profile_and_residual() {
        let grid = Grid::new(8, 16, 1.0).unwrap();
        for law in [
            PressureLaw::gamma_law(1.6).unwrap(),
            PressureLaw::gamma_law(3.0).unwrap(),
            PressureLaw::Mixed(MixedPolytrope::new(0.5, 1.6, 2.4).unwrap()),
        ] {
            let regime = validate_regime(2.0, 1.25, 0.2).unwrap();
            let prof = equilibrium_density(&regime, &law, &grid).unwrap();
            assert!(prof.equilibrium_residual(&law, &grid) < 1e-12);
            assert!(prof.rho_star > 0.0 && prof.rho_star < 1.0);
        }
    }

    #[test]
    fn relative_energy_vanishes_at_reference() {
        let grid = Grid::new(8, 8, 1.0).unwrap();
        let law = PressureLaw::gamma_law(2.0).unwrap();
        let regime = validate_regime(1.0, 0.75, 0.1).unwrap();
        let prof = equilibrium_density(&regime, &law, &grid).unwrap();
        let rho = prof.rho_tilde_field(&grid);
        assert_eq!(relative_energy(&rho, &prof, &law).unwrap(), 0.0);
        let neg = rho.map(|v| v - 2.0);
        assert!(matches!(
            relative_energy(&neg, &prof, &law),
            Err(EquilibriumError::NegativeDensity { .. })
        ));
    }
}
