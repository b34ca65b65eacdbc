//! Exact exponential of the fast operator `(r, V) -> (div V / eps^m, grad r / eps^m + e3 x V / eps)`.
//!
//! With `W = -i V_hat` the per-mode generator is the real antisymmetric matrix
//! `[[0, a d^T], [-a d, -f J]]` (`a = eps^-m`, `f = 1/eps`, `J = e3 x`), so each
//! mode evolves by a rotation in `R^4` applied to real and imaginary parts alike.

use nalgebra::Matrix4;
use num_complex::Complex64;

use super::FluidState;
use crate::regime::ScalingRegime;
use crate::spectral::{Field, Grid};

pub struct ModePropagator {
    dt: f64,
    mats: Vec<[f64; 16]>,
}

/// Per-mode generator acting on `(r, W)`.
pub fn generator(d: [f64; 3], acoustic: f64, rotation: f64) -> Matrix4<f64> {
    let (a, f) = (acoustic, rotation);
    Matrix4::new(
        0.0, a * d[0], a * d[1], a * d[2],
        -a * d[0], 0.0, f, 0.0,
        -a * d[1], -f, 0.0, 0.0,
        -a * d[2], 0.0, 0.0, 0.0,
    )
}

impl ModePropagator {
    pub fn new(grid: &Grid, regime: &ScalingRegime, dt: f64) -> ModePropagator {
        let a = 1.0 / regime.mach();
        let f = regime.rotation();
        let mats = (0..grid.spec_len())
            .map(|idx| {
                let m = (generator(grid.deriv_wavevector(idx), a, f) * dt).exp();
                let mut out = [0.0; 16];
                for i in 0..4 {
                    for j in 0..4 {
                        out[4 * i + j] = m[(i, j)];
                    }
                }
                out
            })
            .collect();
        ModePropagator { dt, mats }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn matrix(&self, idx: usize) -> Matrix4<f64> {
        Matrix4::from_row_slice(&self.mats[idx])
    }

    /// Advances spectral coefficients `(r_hat, V_hat)` in place.
    pub fn apply(&self, r: &mut [Complex64], v: &mut [Vec<Complex64>; 3]) {
        for (idx, m) in self.mats.iter().enumerate() {
            let x = [
                r[idx],
                Complex64::new(v[0][idx].im, -v[0][idx].re),
                Complex64::new(v[1][idx].im, -v[1][idx].re),
                Complex64::new(v[2][idx].im, -v[2][idx].re),
            ];
            let mut y = [Complex64::new(0.0, 0.0); 4];
            for (i, yi) in y.iter_mut().enumerate() {
                let row = &m[4 * i..4 * i + 4];
                *yi = x[0] * row[0] + x[1] * row[1] + x[2] * row[2] + x[3] * row[3];
            }
            r[idx] = y[0];
            for c in 0..3 {
                v[c][idx] = Complex64::new(-y[c + 1].im, y[c + 1].re);
            }
        }
    }
}

/// Applies the fast linear flow over `dt` to a state.
pub fn propagate_linear(state: &FluidState, dt: f64, regime: &ScalingRegime) -> FluidState {
    let grid = state.grid();
    let prop = ModePropagator::new(grid, regime, dt);
    let mut r = grid.forward(state.rho1.comp(0));
    let mut v = [0, 1, 2].map(|c| grid.forward(state.momentum.comp(c)));
    prop.apply(&mut r, &mut v);
    let mut out = state.clone();
    out.rho1 = Field::scalar(grid, grid.inverse(&r), state.rho1.parity(0));
    out.momentum = Field::new(
        grid,
        v.iter().map(|c| grid.inverse(c)).collect(),
        state.momentum.parities().to_vec(),
    );
    out.time += dt;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regime::validate_regime;
    use nalgebra::Vector4;

    /// Classical RK4 on the 4x4 linear system with many small steps.
    fn rk4_oracle(n: &Matrix4<f64>, x0: Vector4<f64>, t: f64, steps: usize) -> Vector4<f64> {
        let h = t / steps as f64;
        let mut x = x0;
        for _ in 0..steps {
            let k1 = n * x;
            let k2 = n * (x + k1 * (h / 2.0));
            let k3 = n * (x + k2 * (h / 2.0));
            let k4 = n * (x + k3 * h);
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        x
    }

    #[test]
    fn propagators_are_isometries() {
        let g = Grid::new(8, 8, 6.0).unwrap();
        let reg = validate_regime(2.0, 1.25, 0.1).unwrap();
        let p = ModePropagator::new(&g, &reg, 0.013);
        for idx in 0..g.spec_len() {
            let m = p.matrix(idx);
            let err = (m.transpose() * m - Matrix4::identity()).abs().max();
            assert!(err < 1e-12, "mode {idx}: {err}");
        }
    }

    #[test]
    fn zero_mode_rotates_horizontal_momentum() {
        let g = Grid::new(8, 8, 6.0).unwrap();
        let reg = validate_regime(1.0, 0.75, 0.2).unwrap();
        let dt = 0.03;
        let p = ModePropagator::new(&g, &reg, dt);
        let mut r = vec![Complex64::new(0.0, 0.0); g.spec_len()];
        r[0] = Complex64::new(0.7, 0.0);
        let mut v = [0, 1, 2].map(|_| vec![Complex64::new(0.0, 0.0); g.spec_len()]);
        v[0][0] = Complex64::new(1.0, 0.0);
        v[2][0] = Complex64::new(0.4, 0.0);
        p.apply(&mut r, &mut v);
        let ang = dt / reg.eps;
        assert!((r[0].re - 0.7).abs() < 1e-15);
        assert!((v[2][0].re - 0.4).abs() < 1e-15);
        // dV/dt = -e3 x V / eps rotates V^h clockwise
        assert!((v[0][0].re - ang.cos()).abs() < 1e-14);
        assert!((v[1][0].re + ang.sin()).abs() < 1e-14);
    }

    #[test]
    fn zero_step_is_identity() {
        let g = Grid::new(8, 8, 6.0).unwrap();
        let reg = validate_regime(2.0, 1.5, 0.1).unwrap();
        let p = ModePropagator::new(&g, &reg, 0.0);
        for idx in [0, 5, 17, g.spec_len() - 1] {
            assert_eq!(p.matrix(idx), Matrix4::identity());
        }
    }

    #[test]
    fn single_mode_matches_ode_oracle() {
        let g = Grid::new(8, 8, 6.0).unwrap();
        let reg = validate_regime(2.0, 1.25, 0.2).unwrap();
        let t = 10.0 * reg.eps;
        let p = ModePropagator::new(&g, &reg, t);
        let idx = g.spec_index(1, 2, 1);
        let n = generator(g.deriv_wavevector(idx), 1.0 / reg.mach(), reg.rotation());
        let x0 = Vector4::new(0.3, -0.2, 0.5, 0.1);
        let expected = rk4_oracle(&n, x0, t, 400_000);
        let got = p.matrix(idx) * x0;
        assert!((got - expected).abs().max() < 1e-10, "{got} vs {expected}");
        // dispersion: eigenfrequencies satisfy w1^2 + w2^2 = a^2 |d|^2 + f^2
        let d = g.deriv_wavevector(idx);
        let a = 1.0 / reg.mach();
        let sum = a * a * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) + reg.rotation().powi(2);
        let nn = n * n;
        assert!((-nn.trace() / 2.0 - sum).abs() < 1e-9 * sum);
    }
}
