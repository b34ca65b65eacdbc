use serde::Serialize;

use super::bounds::{essential_mask, sum_norm, SumNorm};
use super::DiagnosticsError;
use crate::equilibrium::StaticProfile;
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::solver::check_positive;
use crate::spectral::{Field, Parity};

/// Pressure remainder `Pi` defined by
/// `(p(rho) - p(rho~)) / eps^{2m} = rho1 / eps^m + Pi / eps^{2n-m}`.
#[derive(Debug, Clone)]
pub struct PressureSplit {
    pub rho1: Field,
    pub pi: Field,
    /// `max |lhs - rhs| / max |lhs|` of the defining identity
    pub identity_residual: f64,
    pub norms: PressureNorms,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PressureNorms {
    pub pi_l2: f64,
    /// essential part in `L^2`, residual part in `L^1`
    pub pi_sum: SumNorm,
}

/// Computes `Pi` from a density field.
pub fn pi_decompose(
    rho: &Field,
    profile: &StaticProfile,
    regime: &ScalingRegime,
    law: &PressureLaw,
) -> Result<PressureSplit, DiagnosticsError> {
    check_positive(rho.comp(0))?;
    let grid = rho.grid();
    let nv = grid.nv();
    let (mach, strat) = (regime.mach(), regime.strat());
    let rho1: Vec<f64> = rho
        .comp(0)
        .iter()
        .enumerate()
        .map(|(i, r)| (r - profile.rho_tilde[i % nv]) / mach)
        .collect();
    let pi: Vec<f64> = rho1
        .iter()
        .enumerate()
        .map(|(i, &r)| law.pressure_remainder(profile.rho_tilde[i % nv], r, mach, strat))
        .collect();

    let pi_scale = regime.eps.powf(2.0 * regime.n - regime.m);
    let (mut worst, mut size) = (0.0f64, 0.0f64);
    for (i, (&r, &p)) in rho1.iter().zip(&pi).enumerate() {
        let rt = profile.rho_tilde[i % nv];
        let lhs = law.pressure_increment(rt, rho.comp(0)[i] - rt) / (mach * mach);
        let rhs = r / mach + p / pi_scale;
        worst = worst.max((lhs - rhs).abs());
        size = size.max(lhs.abs());
    }
    let identity_residual = if size > 0.0 { worst / size } else { worst };

    let mask = essential_mask(rho.comp(0), profile.rho_star);
    let pi_field = Field::scalar(grid, pi, Parity::Even);
    let norms = PressureNorms {
        pi_l2: pi_field.l2_norm(),
        pi_sum: sum_norm(pi_field.comp(0), &mask, grid.cell_volume(), 1.0),
    };
    Ok(PressureSplit {
        rho1: Field::scalar(grid, rho1, Parity::Even),
        pi: pi_field,
        identity_residual,
        norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::equilibrium_density;
    use crate::regime::validate_regime;
    use crate::spectral::Grid;

    #[test]
    fn equilibrium_has_no_remainder() {
        let g = Grid::new(8, 8, 6.0).unwrap();
        let reg = validate_regime(2.0, 1.25, 0.1).unwrap();
        let law = PressureLaw::gamma_law(1.6).unwrap();
        let prof = equilibrium_density(&reg, &law, &g).unwrap();
        let split = pi_decompose(&prof.rho_tilde_field(&g), &prof, &reg, &law).unwrap();
        assert_eq!(split.pi.max_abs(), 0.0);
        assert_eq!(split.identity_residual, 0.0);
    }

    #[test]
    fn quadratic_law_expansion() {
        // p = rho^2/2: Pi = rho1 (eps^{2n-m} rho1 / 2 + r~)
        let g = Grid::new(8, 8, 6.0).unwrap();
        let reg = validate_regime(2.0, 1.5, 0.2).unwrap();
        let law = PressureLaw::gamma_law(2.0).unwrap();
        let prof = equilibrium_density(&reg, &law, &g).unwrap();
        let pert = Field::from_fn(&g, Parity::Even, |x, y, z| (x - y).sin() + 0.5 * (3.0 * z).cos());
        let rho = prof.rho_tilde_field(&g).add(&pert.scaled(reg.mach()));
        let split = pi_decompose(&rho, &prof, &reg, &law).unwrap();
        let scale = reg.eps.powf(2.0 * reg.n - reg.m);
        let expected: Vec<f64> = pert
            .comp(0)
            .iter()
            .enumerate()
            .map(|(i, r)| r * (scale * r / 2.0 + prof.r_tilde[i % g.nv()]))
            .collect();
        let expected = Field::scalar(&g, expected, Parity::Even);
        assert!(split.pi.max_diff(&expected) < 1e-12);
        assert!(split.rho1.max_diff(&pert) < 1e-12);
        assert!(split.identity_residual < 1e-13);
    }

    #[test]
    fn rejects_vacuum() {
        let g = Grid::new(8, 8, 6.0).unwrap();
        let reg = validate_regime(2.0, 1.25, 0.1).unwrap();
        let law = PressureLaw::gamma_law(2.0).unwrap();
        let prof = equilibrium_density(&reg, &law, &g).unwrap();
        let mut rho = prof.rho_tilde_field(&g);
        rho.comp_mut(0)[3] = 0.0;
        assert!(matches!(
            pi_decompose(&rho, &prof, &reg, &law),
            Err(DiagnosticsError::NonPositiveDensity { index: 3, .. })
        ));
    }
}
