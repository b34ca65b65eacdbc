//! Slow momentum tendency `F = f + eps^{m-2n} g`.
//!
//! `f` collects viscous stress and convection, `g` the gravity and pressure
//! remainder. The fast terms `-grad rho1 / eps^m - e3 x V / eps` are handled
//! by the propagator; during the source step `rho1` is frozen.

use std::sync::Arc;

use num_complex::Complex64;

use super::{check_positive, FluidState, SolverError, SourceForm};
use crate::equilibrium::StaticProfile;
use crate::gravity::GravityPotential;
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::spectral::ops::dealias_mask;
use crate::spectral::{Field, Grid, VELOCITY_PARITY};

type Spec = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Symmetric tensor components in storage order.
const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn pair_slot(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

/// `f` and `g` in physical space.
#[derive(Debug, Clone)]
pub struct Sources {
    pub f: Field,
    pub g: Field,
    /// `int S(grad u) : grad u`
    pub dissipation_rate: f64,
}

enum Target<'a> {
    Total(&'a mut [Spec; 3]),
    Split { f: &'a mut [Spec; 3], g: &'a mut [Spec; 3] },
}

/// Evaluates the slow tendency with reusable buffers.
pub struct SourceEvaluator {
    grid: Arc<Grid>,
    law: PressureLaw,
    form: SourceForm,
    mu: f64,
    eta: f64,
    mach: f64,
    strat: f64,
    remainder_scale: f64,
    rho_tilde: Vec<f64>,
    gravity_slope: Vec<f64>,
    mask: Option<Vec<bool>>,
    // physical-space buffers
    r: Vec<f64>,
    v: [Vec<f64>; 3],
    rho: Vec<f64>,
    u: [Vec<f64>; 3],
    grad_u: [Vec<f64>; 9],
    div_v: Vec<f64>,
    scalar: Vec<f64>,
    grad_s: [Vec<f64>; 3],
    tensor: [Vec<f64>; 6],
    q: [Vec<f64>; 3],
    q2: [Vec<f64>; 3],
    // spectral buffers
    u_hat: [Spec; 3],
    tmp: Spec,
    tensor_hat: [Spec; 6],
    s_hat: Spec,
}

impl SourceEvaluator {
    pub fn new(
        grid: &Arc<Grid>,
        regime: &ScalingRegime,
        law: &PressureLaw,
        profile: &StaticProfile,
        form: SourceForm,
        mu: f64,
        eta: f64,
        dealias: bool,
    ) -> SourceEvaluator {
        let n = grid.len();
        let ns = grid.spec_len();
        let real = || vec![0.0; n];
        let spec = || vec![ZERO; ns];
        let gravity = GravityPotential;
        SourceEvaluator {
            grid: Arc::clone(grid),
            law: *law,
            form,
            mu,
            eta,
            mach: regime.mach(),
            strat: regime.strat(),
            remainder_scale: regime.remainder_scale(),
            rho_tilde: profile.rho_tilde.clone(),
            gravity_slope: grid.z_coords().iter().map(|&z| gravity.derivative(z)).collect(),
            mask: dealias.then(|| dealias_mask(grid)),
            r: real(),
            v: [real(), real(), real()],
            rho: real(),
            u: [real(), real(), real()],
            grad_u: std::array::from_fn(|_| real()),
            div_v: real(),
            scalar: real(),
            grad_s: [real(), real(), real()],
            tensor: std::array::from_fn(|_| real()),
            q: [real(), real(), real()],
            q2: [real(), real(), real()],
            u_hat: [spec(), spec(), spec()],
            tmp: spec(),
            tensor_hat: std::array::from_fn(|_| spec()),
            s_hat: spec(),
        }
    }

    pub fn form(&self) -> SourceForm {
        self.form
    }

    /// Writes `F_hat` into `out` and returns the dissipation rate.
    pub fn tendency(
        &mut self,
        r_hat: &[Complex64],
        v_hat: &[Spec; 3],
        out: &mut [Spec; 3],
    ) -> Result<f64, SolverError> {
        self.evaluate(r_hat, v_hat, Target::Total(out))
    }

    /// Writes `f_hat` and `g_hat` separately.
    pub fn split(
        &mut self,
        r_hat: &[Complex64],
        v_hat: &[Spec; 3],
        f: &mut [Spec; 3],
        g: &mut [Spec; 3],
    ) -> Result<f64, SolverError> {
        self.evaluate(r_hat, v_hat, Target::Split { f, g })
    }

    /// `tmp <- i d_axis src`
    fn derive_into(grid: &Grid, src: &[Complex64], axis: usize, dst: &mut [Complex64]) {
        for (idx, (o, c)) in dst.iter_mut().zip(src).enumerate() {
            let k = grid.deriv_wavevector(idx)[axis];
            *o = Complex64::new(-k * c.im, k * c.re);
        }
    }

    /// `dst += scale * i d_axis src`
    fn add_derivative(grid: &Grid, src: &[Complex64], axis: usize, scale: f64, dst: &mut [Complex64]) {
        for (idx, (o, c)) in dst.iter_mut().zip(src).enumerate() {
            let k = scale * grid.deriv_wavevector(idx)[axis];
            *o += Complex64::new(-k * c.im, k * c.re);
        }
    }

    fn evaluate(
        &mut self,
        r_hat: &[Complex64],
        v_hat: &[Spec; 3],
        mut target: Target<'_>,
    ) -> Result<f64, SolverError> {
        let grid = Arc::clone(&self.grid);
        let nv = grid.nv();
        let mach = self.mach;

        // physical density, momentum and velocity
        grid.inverse_into(r_hat, &mut self.r);
        for c in 0..3 {
            grid.inverse_into(&v_hat[c], &mut self.v[c]);
        }
        for (i, rho) in self.rho.iter_mut().enumerate() {
            *rho = self.rho_tilde[i % nv] + mach * self.r[i];
        }
        check_positive(&self.rho)?;
        for c in 0..3 {
            for ((u, v), rho) in self.u[c].iter_mut().zip(&self.v[c]).zip(&self.rho) {
                *u = v / rho;
            }
            grid.forward_into(&self.u[c], &mut self.u_hat[c]);
        }
        // grad_u[3 i + j] = d_j u_i
        for i in 0..3 {
            for j in 0..3 {
                Self::derive_into(&grid, &self.u_hat[i], j, &mut self.tmp);
                grid.inverse_destroying(&mut self.tmp, &mut self.grad_u[3 * i + j]);
            }
        }

        // stress minus the convective flux, and the dissipation rate
        let flux_weight = match self.form {
            SourceForm::Energy => 0.5,
            SourceForm::Wave => 1.0,
        };
        let (mu, eta) = (self.mu, self.eta);
        let mut dissipation = 0.0;
        for p in 0..grid.len() {
            let gu = |i: usize, j: usize| self.grad_u[3 * i + j][p];
            let div_u = gu(0, 0) + gu(1, 1) + gu(2, 2);
            let bulk = (eta - 2.0 * mu / 3.0) * div_u;
            for (slot, &(i, j)) in PAIRS.iter().enumerate() {
                let mut s = mu * (gu(i, j) + gu(j, i));
                if i == j {
                    s += bulk;
                }
                let w = if i == j { 1.0 } else { 2.0 };
                dissipation += w * s * 0.5 * (gu(i, j) + gu(j, i));
                self.tensor[slot][p] = s - flux_weight * self.v[i][p] * self.u[j][p];
            }
        }
        dissipation *= grid.cell_volume();
        for slot in 0..6 {
            grid.forward_into(&self.tensor[slot], &mut self.tensor_hat[slot]);
        }

        // f_hat = div tensor (+ grid terms below)
        let f_hat: &mut [Spec; 3] = match &mut target {
            Target::Total(out) => out,
            Target::Split { f, .. } => f,
        };
        for i in 0..3 {
            f_hat[i].fill(ZERO);
            for j in 0..3 {
                Self::add_derivative(&grid, &self.tensor_hat[pair_slot(i, j)], j, 1.0, &mut f_hat[i]);
            }
        }

        match self.form {
            SourceForm::Energy => self.energy_terms(r_hat, v_hat, &mut target)?,
            SourceForm::Wave => self.wave_terms(&mut target),
        }

        if let Some(mask) = &self.mask {
            let apply = |s: &mut [Spec; 3]| {
                for c in s.iter_mut() {
                    for (v, &keep) in c.iter_mut().zip(mask) {
                        if !keep {
                            *v = ZERO;
                        }
                    }
                }
            };
            match target {
                Target::Total(out) => apply(out),
                Target::Split { f, g } => {
                    apply(f);
                    apply(g);
                }
            }
        }
        Ok(dissipation)
    }

    /// Skew-symmetric convection remainder and `eps^-m (grad r - rho grad h)`.
    fn energy_terms(
        &mut self,
        r_hat: &[Complex64],
        v_hat: &[Spec; 3],
        target: &mut Target<'_>,
    ) -> Result<(), SolverError> {
        let grid = Arc::clone(&self.grid);
        let nv = grid.nv();
        let mach = self.mach;
        self.tmp.fill(ZERO);
        for j in 0..3 {
            Self::add_derivative(&grid, &v_hat[j], j, 1.0, &mut self.tmp);
        }
        grid.inverse_destroying(&mut self.tmp, &mut self.div_v);
        // h = (H'(rho) - H'(rho~)) / eps^m
        for (i, h) in self.scalar.iter_mut().enumerate() {
            *h = self.law.dh_increment(self.rho_tilde[i % nv], mach * self.r[i]) / mach;
        }
        grid.forward_into(&self.scalar, &mut self.s_hat);
        for c in 0..3 {
            Self::derive_into(&grid, &self.s_hat, c, &mut self.tmp);
            grid.inverse_destroying(&mut self.tmp, &mut self.grad_s[c]);
        }
        let inv_mach = 1.0 / mach;
        let split = matches!(target, Target::Split { .. });
        for i in 0..3 {
            for p in 0..grid.len() {
                let mut conv = 0.0;
                for j in 0..3 {
                    conv += self.v[j][p] * self.grad_u[3 * i + j][p];
                }
                let qf = -0.5 * conv - 0.5 * self.u[i][p] * self.div_v[p];
                let qg = -inv_mach * self.rho[p] * self.grad_s[i][p];
                if split {
                    self.q[i][p] = qf;
                    self.q2[i][p] = qg;
                } else {
                    self.q[i][p] = qf + qg;
                }
            }
        }
        match target {
            Target::Total(out) => {
                for i in 0..3 {
                    grid.forward_into(&self.q[i], &mut self.tmp);
                    for (o, t) in out[i].iter_mut().zip(&self.tmp) {
                        *o += t;
                    }
                    Self::add_derivative(&grid, r_hat, i, inv_mach, &mut out[i]);
                }
            }
            Target::Split { f, g } => {
                // F = f + eps^{m-2n} g
                let to_g = 1.0 / self.remainder_scale;
                for i in 0..3 {
                    grid.forward_into(&self.q[i], &mut self.tmp);
                    for (o, t) in f[i].iter_mut().zip(&self.tmp) {
                        *o += t;
                    }
                    grid.forward_into(&self.q2[i], &mut g[i]);
                    Self::add_derivative(&grid, r_hat, i, inv_mach, &mut g[i]);
                    for v in g[i].iter_mut() {
                        *v *= to_g;
                    }
                }
            }
        }
        Ok(())
    }

    /// `g = rho1 grad G - grad Pi`.
    fn wave_terms(&mut self, target: &mut Target<'_>) {
        let grid = Arc::clone(&self.grid);
        let nv = grid.nv();
        for (i, pi) in self.scalar.iter_mut().enumerate() {
            *pi = self.law.pressure_remainder(self.rho_tilde[i % nv], self.r[i], self.mach, self.strat);
        }
        grid.forward_into(&self.scalar, &mut self.s_hat);
        for (i, q) in self.q[2].iter_mut().enumerate() {
            *q = self.r[i] * self.gravity_slope[i % nv];
        }
        match target {
            Target::Total(out) => {
                let c = self.remainder_scale;
                for i in 0..3 {
                    Self::add_derivative(&grid, &self.s_hat, i, -c, &mut out[i]);
                }
                grid.forward_into(&self.q[2], &mut self.tmp);
                for (o, t) in out[2].iter_mut().zip(&self.tmp) {
                    *o += c * t;
                }
            }
            Target::Split { g, .. } => {
                for i in 0..2 {
                    Self::derive_into(&grid, &self.s_hat, i, &mut g[i]);
                    for v in g[i].iter_mut() {
                        *v = -*v;
                    }
                }
                grid.forward_into(&self.q[2], &mut g[2]);
                Self::add_derivative(&grid, &self.s_hat, 2, -1.0, &mut g[2]);
            }
        }
    }
}

/// Physical-space `f` and `g` of a state under the given source form.
pub fn assemble_sources(
    state: &FluidState,
    regime: &ScalingRegime,
    law: &PressureLaw,
    form: SourceForm,
    mu: f64,
    eta: f64,
) -> Result<Sources, SolverError> {
    let grid = state.grid();
    let mut ev = SourceEvaluator::new(grid, regime, law, &state.profile, form, mu, eta, false);
    let r_hat = grid.forward(state.rho1.comp(0));
    let v_hat = [0, 1, 2].map(|c| grid.forward(state.momentum.comp(c)));
    let mut f = [0, 1, 2].map(|_| vec![ZERO; grid.spec_len()]);
    let mut g = f.clone();
    let rate = ev.split(&r_hat, &v_hat, &mut f, &mut g)?;
    let to_field = |s: &[Spec; 3]| {
        Field::new(grid, s.iter().map(|c| grid.inverse(c)).collect(), VELOCITY_PARITY.to_vec())
    };
    Ok(Sources { f: to_field(&f), g: to_field(&g), dissipation_rate: rate })
}
