use std::sync::Arc;

use num_complex::Complex64;

use super::{guard, integrating_factor_heun, LimitError, Plane};
use crate::spectral::ops::{diff_ops, helmholtz_h, vertical_mean, DiffOp};
use crate::spectral::{Field, Grid, Parity};

/// Vorticity of the 2D limit flow on the horizontal torus.
#[derive(Debug, Clone)]
pub struct NS2DState {
    pub omega: Field,
    pub time: f64,
}

impl NS2DState {
    pub fn grid(&self) -> &Arc<Grid> {
        self.omega.grid()
    }

    /// `U = grad_h^perp psi` with `lap_h psi = omega`.
    pub fn velocity(&self) -> Field {
        let plane = Plane::new(self.grid()).expect("limit state lives on a horizontal grid");
        let (u0, u1) = velocity_spectra(&plane, &self.grid().forward(self.omega.comp(0)));
        let g = self.grid();
        Field::new(g, vec![g.inverse(&u0), g.inverse(&u1)], vec![Parity::Even; 2])
    }

    /// `1/2 int |U|^2`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.velocity().inner(&self.velocity())
    }
}

fn velocity_spectra(plane: &Plane, w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let stream: Vec<Complex64> = w
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let k2 = plane.k2(idx);
            if k2 > 0.0 { -c / k2 } else { Complex64::new(0.0, 0.0) }
        })
        .collect();
    let u0 = plane.deriv(&stream, 1).into_iter().map(|c| -c).collect();
    (u0, plane.deriv(&stream, 0))
}

/// `omega_0 = curl_h` of the horizontal projection of the vertical mean of `u0^h`.
pub fn ns2d_init(u0: &Field) -> Result<NS2DState, LimitError> {
    let mean = vertical_mean(&u0.leading(2));
    let projected = helmholtz_h(&mean)?;
    Ok(NS2DState { omega: diff_ops(&projected, DiffOp::CurlH)?, time: 0.0 })
}

/// Advances `d_t omega + U . grad omega = mu lap_h omega` by one step:
/// diffusion integrated exactly, advection explicit and dealiased.
pub fn ns2d_step(state: &NS2DState, dt: f64, mu: f64) -> Result<NS2DState, LimitError> {
    let plane = Plane::new(state.grid())?;
    let g = &plane.grid;
    let w = g.forward(state.omega.comp(0));
    let decay: Vec<f64> = (0..w.len()).map(|idx| (-mu * plane.k2(idx) * dt).exp()).collect();
    let advection = |s: &[Complex64]| -> Vec<Complex64> {
        let s = plane.truncated(s);
        let (u0, u1) = velocity_spectra(&plane, &s);
        let (wx, wy) = (plane.deriv(&s, 0), plane.deriv(&s, 1));
        plane.dealiased_dot([&u0, &u1], [&wx, &wy]).into_iter().map(|c| -c).collect()
    };
    let next = integrating_factor_heun(&w, &decay, dt, advection);
    let time = state.time + dt;
    guard(time, &next)?;
    Ok(NS2DState { omega: Field::scalar(g, g.inverse(&next), Parity::Even), time })
}
