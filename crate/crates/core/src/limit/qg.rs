use std::sync::Arc;

use num_complex::Complex64;

use super::{guard, integrating_factor_heun, LimitError, Plane};
use crate::spectral::ops::{diff_ops, vertical_mean, DiffOp};
use crate::spectral::{Field, Grid, Parity};

/// Density perturbation `q` of the quasi-geostrophic limit; the velocity is
/// `grad_h^perp q`.
#[derive(Debug, Clone)]
pub struct QGState {
    pub q: Field,
    pub time: f64,
}

impl QGState {
    pub fn grid(&self) -> &Arc<Grid> {
        self.q.grid()
    }

    pub fn velocity(&self) -> Field {
        diff_ops(&self.q, DiffOp::GradHPerp).expect("scalar field")
    }

    /// `q - lap_h q`, the transported quantity.
    pub fn potential_vorticity(&self) -> Field {
        self.q.sub(&diff_ops(&self.q, DiffOp::LaplacianH).expect("scalar field"))
    }

    /// `1/2 int (q^2 + |grad_h q|^2)`.
    pub fn energy(&self) -> f64 {
        let grad = diff_ops(&self.q, DiffOp::GradH).expect("scalar field");
        0.5 * (self.q.inner(&self.q) + grad.inner(&grad))
    }
}

/// Solves `(1 - lap_h) q_0 = <rho1_0> - curl_h <u0^h>`.
pub fn qg_init(rho1_0: &Field, u0: &Field) -> Result<QGState, LimitError> {
    let mut rhs = vertical_mean(rho1_0);
    let curl = diff_ops(&vertical_mean(&u0.leading(2)), DiffOp::CurlH)?;
    rhs.axpy(-1.0, &curl);
    let plane = Plane::new(rhs.grid())?;
    let g = &plane.grid;
    let s: Vec<Complex64> = g
        .forward(rhs.comp(0))
        .into_iter()
        .enumerate()
        .map(|(idx, c)| c / (1.0 + plane.k2(idx)))
        .collect();
    Ok(QGState { q: Field::scalar(g, g.inverse(&s), Parity::Even), time: 0.0 })
}

/// Advances `d_t (q - lap_h q) = grad_h^perp q . grad_h lap_h q - mu lap_h^2 q`
/// by one step: the linear part exactly per mode, the Jacobian explicit and
/// dealiased.
pub fn qg_step(state: &QGState, dt: f64, mu: f64) -> Result<QGState, LimitError> {
    let plane = Plane::new(state.grid())?;
    let g = &plane.grid;
    let q = g.forward(state.q.comp(0));
    let helm: Vec<f64> = (0..q.len()).map(|idx| 1.0 + plane.k2(idx)).collect();
    let decay: Vec<f64> = (0..q.len())
        .map(|idx| {
            let k2 = plane.k2(idx);
            (-mu * k2 * k2 / helm[idx] * dt).exp()
        })
        .collect();
    let jacobian = |s: &[Complex64]| -> Vec<Complex64> {
        let s = plane.truncated(s);
        let u0: Vec<Complex64> = plane.deriv(&s, 1).into_iter().map(|c| -c).collect();
        let u1 = plane.deriv(&s, 0);
        let lap: Vec<Complex64> = s.iter().enumerate().map(|(idx, c)| -plane.k2(idx) * c).collect();
        let (lx, ly) = (plane.deriv(&lap, 0), plane.deriv(&lap, 1));
        plane
            .dealiased_dot([&u0, &u1], [&lx, &ly])
            .into_iter()
            .zip(&helm)
            .map(|(c, h)| c / h)
            .collect()
    };
    let next = integrating_factor_heun(&q, &decay, dt, jacobian);
    let time = state.time + dt;
    guard(time, &next)?;
    Ok(QGState { q: Field::scalar(g, g.inverse(&next), Parity::Even), time })
}
