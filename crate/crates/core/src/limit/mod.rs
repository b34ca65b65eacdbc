//! Limit dynamics on the horizontal torus: 2D incompressible Navier–Stokes in
//! vorticity form (`m > 1`) and the quasi-geostrophic equation (`m = 1`),
//! their initialisation from 3D data, columnar lifts and constraint checks.

mod ns2d;
mod qg;

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::regime::ScalingRegime;
use crate::solver::{FluidState, SolverError};
use crate::spectral::lp::sobolev_norm;
use crate::spectral::ops::{dealias_mask, diff_ops, DiffOp};
use crate::spectral::{Field, Grid, Parity, SpectralError, VELOCITY_PARITY};

pub use ns2d::{ns2d_init, ns2d_step, NS2DState};
pub use qg::{qg_init, qg_step, QGState};

/// Norm above which a limit run is declared blown up.
pub const LIMIT_CEILING: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("limit solution blew up at t = {time} (norm {norm})")]
    Blowup { time: f64, norm: f64 },
    #[error("expected a field on the horizontal grid")]
    NotHorizontal,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Pseudo-spectral machinery shared by both limit solvers.
pub(crate) struct Plane {
    pub grid: Arc<Grid>,
    pub keep: Vec<bool>,
}

impl Plane {
    pub fn new(grid: &Arc<Grid>) -> Result<Plane, LimitError> {
        if !grid.is_horizontal() {
            return Err(LimitError::NotHorizontal);
        }
        Ok(Plane { grid: Arc::clone(grid), keep: dealias_mask(grid) })
    }

    pub fn k(&self, idx: usize) -> [f64; 2] {
        let k = self.grid.deriv_wavevector(idx);
        [k[0], k[1]]
    }

    pub fn k2(&self, idx: usize) -> f64 {
        let [a, b] = self.k(idx);
        a * a + b * b
    }

    /// `i k_axis c` for every coefficient.
    pub fn deriv(&self, s: &[Complex64], axis: usize) -> Vec<Complex64> {
        s.iter()
            .enumerate()
            .map(|(idx, c)| Complex64::new(0.0, self.k(idx)[axis]) * c)
            .collect()
    }

    pub fn truncated(&self, s: &[Complex64]) -> Vec<Complex64> {
        s.iter()
            .zip(&self.keep)
            .map(|(c, &k)| if k { *c } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    /// Forward transform of the product `sum_i a_i b_i`, truncated, with
    /// the zero mode removed.
    pub fn dealiased_dot(&self, a: [&[Complex64]; 2], b: [&[Complex64]; 2]) -> Vec<Complex64> {
        let g = &self.grid;
        let phys = |s: &[Complex64]| g.inverse(s);
        let (a0, a1, b0, b1) = (phys(a[0]), phys(a[1]), phys(b[0]), phys(b[1]));
        let prod: Vec<f64> = (0..g.len()).map(|i| a0[i] * b0[i] + a1[i] * b1[i]).collect();
        let mut out = self.truncated(&g.forward(&prod));
        out[0] = Complex64::new(0.0, 0.0);
        out
    }
}

/// One step of the second-order integrating-factor Heun scheme for
/// `d_t s = -L s + N(s)`, with `decay = exp(-L dt)` per mode.
pub(crate) fn integrating_factor_heun(
    s: &[Complex64],
    decay: &[f64],
    dt: f64,
    mut nonlinear: impl FnMut(&[Complex64]) -> Vec<Complex64>,
) -> Vec<Complex64> {
    let n0 = nonlinear(s);
    let predictor: Vec<Complex64> = s.iter().zip(&n0).zip(decay).map(|((x, n), e)| (x + n * dt) * e).collect();
    let n1 = nonlinear(&predictor);
    s.iter()
        .zip(&n0)
        .zip(&n1)
        .zip(decay)
        .map(|(((x, a), b), e)| x * e + (a * e + b) * (0.5 * dt))
        .collect()
}

pub(crate) fn guard(time: f64, s: &[Complex64]) -> Result<(), LimitError> {
    let norm = s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || norm > LIMIT_CEILING * s.len() as f64 {
        return Err(LimitError::Blowup { time, norm });
    }
    Ok(())
}

/// Density, density perturbation and velocity of a 3D state, the common
/// input of constraint checks and convergence metrics.
#[derive(Debug, Clone)]
pub struct ObservedState {
    pub time: f64,
    pub density: Field,
    pub rho1: Field,
    pub velocity: Field,
}

impl ObservedState {
    pub fn from_fluid(state: &FluidState, regime: &ScalingRegime) -> Result<ObservedState, LimitError> {
        Ok(ObservedState {
            time: state.time,
            density: state.density(regime.mach()),
            rho1: state.rho1.clone(),
            velocity: state.velocity(regime.mach())?,
        })
    }

    /// Columnar lift of a horizontal density perturbation and velocity at unit density.
    pub fn columnar(grid: &Arc<Grid>, time: f64, rho1_h: &Field, u_h: &Field) -> ObservedState {
        let rho1 = crate::spectral::ops::lift_columnar(rho1_h, grid);
        let u = crate::spectral::ops::lift_columnar(u_h, grid);
        let velocity = Field::stack(&[&u, &Field::zeros(grid, &[Parity::Odd])]).with_parities(&VELOCITY_PARITY);
        ObservedState {
            time,
            density: Field::scalar(grid, vec![1.0; grid.len()], Parity::Even),
            rho1,
            velocity,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.velocity.grid()
    }
}

/// Defects of the limit constraints.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstraintReport {
    pub div_u_hm1: f64,
    pub dz_u_hm1: f64,
    pub u3_l2: f64,
    /// `||grad rho1||_{H^-1}`, reported for `m > 1`
    pub grad_rho1_hm1: Option<f64>,
    /// `||e3 x u + grad rho1||_{H^-1}`, reported for `m = 1`
    pub geostrophic_hm1: Option<f64>,
}

impl ConstraintReport {
    pub fn worst(&self) -> f64 {
        [self.div_u_hm1, self.dz_u_hm1, self.u3_l2]
            .into_iter()
            .chain(self.grad_rho1_hm1)
            .chain(self.geostrophic_hm1)
            .fold(0.0, f64::max)
    }
}

pub fn limit_constraint_check(state: &ObservedState, regime: &ScalingRegime) -> Result<ConstraintReport, LimitError> {
    let u = &state.velocity;
    let grad_rho = diff_ops(&state.rho1, DiffOp::Grad)?;
    let (grad_rho1_hm1, geostrophic_hm1) = if regime.is_isotropic() {
        let mut defect = grad_rho.clone();
        defect.comp_mut(0).iter_mut().zip(u.comp(1)).for_each(|(d, v)| *d -= v);
        defect.comp_mut(1).iter_mut().zip(u.comp(0)).for_each(|(d, v)| *d += v);
        (None, Some(sobolev_norm(&defect, -1.0)))
    } else {
        (Some(sobolev_norm(&grad_rho, -1.0)), None)
    };
    Ok(ConstraintReport {
        div_u_hm1: sobolev_norm(&diff_ops(u, DiffOp::Div)?, -1.0),
        dz_u_hm1: sobolev_norm(&diff_ops(u, DiffOp::Dz)?, -1.0),
        u3_l2: u.component(2).l2_norm(),
        grad_rho1_hm1,
        geostrophic_hm1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regime::validate_regime;
    use std::f64::consts::PI;

    #[test]
    fn columnar_solenoidal_state_satisfies_constraints() {
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let h = g.horizontal();
        let stream = Field::from_fn(&h, Parity::Even, |x, y, _| (0.5 * x).sin() * y.cos() + 0.3 * (x + y).cos());
        let u = diff_ops(&stream, DiffOp::GradHPerp).unwrap();
        let zero = Field::zeros(&h, &[Parity::Even]);
        let obs = ObservedState::columnar(&g, 0.0, &zero, &u);
        let reg = validate_regime(2.0, 1.25, 0.1).unwrap();
        let rep = limit_constraint_check(&obs, &reg).unwrap();
        assert!(rep.worst() < 1e-10, "{rep:?}");

        // geostrophically balanced: u = grad_h^perp q, rho1 = q
        let iso = validate_regime(1.0, 0.75, 0.1).unwrap();
        let obs = ObservedState::columnar(&g, 0.0, &stream, &u);
        let rep = limit_constraint_check(&obs, &iso).unwrap();
        assert!(rep.worst() < 1e-10, "{rep:?}");
        assert!(rep.grad_rho1_hm1.is_none());
    }

    #[test]
    fn ill_prepared_state_violates_constraints() {
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let vel = Field::stack(&[
            &Field::from_fn(&g, Parity::Even, |x, _, z| (0.5 * x).sin() * (PI * z).cos()),
            &Field::from_fn(&g, Parity::Even, |_, y, _| y.sin()),
            &Field::from_fn(&g, Parity::Odd, |x, _, z| x.cos() * (PI * z).sin()),
        ])
        .with_parities(&VELOCITY_PARITY);
        let obs = ObservedState {
            time: 0.0,
            density: Field::scalar(&g, vec![1.0; g.len()], Parity::Even),
            rho1: Field::from_fn(&g, Parity::Even, |x, y, _| (x - y).cos()),
            velocity: vel,
        };
        for (m, n) in [(2.0, 1.25), (1.0, 0.75)] {
            let rep = limit_constraint_check(&obs, &validate_regime(m, n, 0.1).unwrap()).unwrap();
            assert!(rep.div_u_hm1 > 0.1 && rep.dz_u_hm1 > 0.1 && rep.u3_l2 > 0.1, "{rep:?}");
        }
    }

    #[test]
    fn integrating_factor_is_exact_for_linear_decay() {
        let s = vec![Complex64::new(1.0, 0.5); 3];
        let decay = [0.9, 0.5, 1.0];
        let out = integrating_factor_heun(&s, &decay, 0.1, |x| vec![Complex64::new(0.0, 0.0); x.len()]);
        for ((o, x), e) in out.iter().zip(&s).zip(decay) {
            assert_eq!(*o, x * e);
        }
    }
}
