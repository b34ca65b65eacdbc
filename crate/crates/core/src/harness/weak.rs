//! Weak-formulation residuals of a trajectory against a family of
//! divergence-free columnar test functions.
//!
//! With `theta(t) = cos^2(pi t / 2T)`, mass and momentum balance tested
//! against `theta phi` and `theta psi` read
//!
//! ```text
//! int_0^T theta' (A - A(0)) + theta B dt = 0
//! ```
//!
//! where `A = int rho phi`, `B = int V . grad phi` for mass and
//! `A = int V . psi`, `B = int V (x) u : grad psi + eps^-1 (V2 psi1 - V1 psi2) + mu u . lap psi`
//! for momentum. Pressure, gravity and bulk viscosity drop out because
//! `psi` is horizontal, solenoidal and independent of `x3`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{HarnessError, MetricRecord};
use crate::diagnostics::{ModelParams, TestFunction};
use crate::solver::FluidState;
use crate::spectral::ops::{diff_ops, DiffOp};

/// Residuals of one test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakResidual {
    pub seed: u64,
    pub mass: f64,
    pub mass_relative: f64,
    pub momentum: f64,
    pub momentum_relative: f64,
}

struct Prepared {
    seed: u64,
    phi: Vec<f64>,
    grad_phi: [Vec<f64>; 3],
    psi: [Vec<f64>; 2],
    /// `d_j psi_i` at `2 i + j`
    grad_psi: [Vec<f64>; 4],
    lap_psi: [Vec<f64>; 2],
}

impl Prepared {
    fn new(tf: &TestFunction) -> Result<Prepared, HarnessError> {
        tf.validate()?;
        let grid = tf.psi.grid();
        let grad_phi = diff_ops(&tf.phi, DiffOp::Grad)?;
        let d = |i: usize, j: usize| grid.derivative(tf.psi.comp(i), j);
        let lap = diff_ops(&tf.psi, DiffOp::Laplacian)?;
        Ok(Prepared {
            seed: tf.seed,
            phi: tf.phi.comp(0).to_vec(),
            grad_phi: [0, 1, 2].map(|c| grad_phi.comp(c).to_vec()),
            psi: [0, 1].map(|c| tf.psi.comp(c).to_vec()),
            grad_psi: [d(0, 0), d(0, 1), d(1, 0), d(1, 1)],
            lap_psi: [0, 1].map(|c| lap.comp(c).to_vec()),
        })
    }
}

/// `(mass A, mass B, momentum A, momentum B)` per test function.
type Moments = Vec<[f64; 4]>;

/// Streaming time quadrature of the weak residuals.
pub struct WeakResidualAccumulator {
    family: Vec<Prepared>,
    params: ModelParams,
    t0: f64,
    span: f64,
    initial: Option<Moments>,
    prev: Option<(f64, Vec<[f64; 2]>, Vec<[f64; 2]>)>,
    residual: Vec<[f64; 2]>,
    scale: Vec<[f64; 2]>,
}

impl WeakResidualAccumulator {
    /// Samples are expected on `[t0, t0 + span]`, ending at `t0 + span`.
    pub fn new(
        family: &[TestFunction],
        params: &ModelParams,
        t0: f64,
        span: f64,
    ) -> Result<WeakResidualAccumulator, HarnessError> {
        if !(span > 0.0) {
            return Err(HarnessError::Config(format!("weak residual needs a positive time span, got {span}")));
        }
        let family = family.iter().map(Prepared::new).collect::<Result<Vec<_>, _>>()?;
        Ok(WeakResidualAccumulator {
            residual: vec![[0.0; 2]; family.len()],
            scale: vec![[0.0; 2]; family.len()],
            family,
            params: *params,
            t0,
            span,
            initial: None,
            prev: None,
        })
    }

    fn theta(&self, t: f64) -> (f64, f64) {
        let s = PI * (t - self.t0) / (2.0 * self.span);
        (s.cos().powi(2), -(PI / (2.0 * self.span)) * (2.0 * s).sin())
    }

    fn moments(&self, state: &FluidState) -> Result<Moments, HarnessError> {
        let reg = &self.params.regime;
        let mach = reg.mach();
        let grid = state.grid();
        let u = state.velocity(mach)?;
        let v = &state.momentum;
        let r = state.rho1.comp(0);
        let (rot, mu) = (reg.rotation(), self.params.mu);
        let out = self
            .family
            .iter()
            .map(|tf| {
                let mut acc = [0.0; 4];
                for i in 0..grid.len() {
                    let vv = [v.comp(0)[i], v.comp(1)[i], v.comp(2)[i]];
                    let uu = [u.comp(0)[i], u.comp(1)[i], u.comp(2)[i]];
                    acc[0] += mach * r[i] * tf.phi[i];
                    acc[1] += (0..3).map(|c| vv[c] * tf.grad_phi[c][i]).sum::<f64>();
                    acc[2] += vv[0] * tf.psi[0][i] + vv[1] * tf.psi[1][i];
                    let mut conv = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            conv += vv[a] * uu[b] * tf.grad_psi[2 * a + b][i];
                        }
                    }
                    acc[3] += conv
                        + rot * (vv[1] * tf.psi[0][i] - vv[0] * tf.psi[1][i])
                        + mu * (uu[0] * tf.lap_psi[0][i] + uu[1] * tf.lap_psi[1][i]);
                }
                acc.map(|x| x * grid.cell_volume())
            })
            .collect();
        Ok(out)
    }

    pub fn push(&mut self, state: &FluidState) -> Result<(), HarnessError> {
        let t = state.time;
        let mom = self.moments(state)?;
        let init = self.initial.get_or_insert_with(|| mom.clone()).clone();
        let (th, dth) = self.theta(t);
        let mut values = Vec::with_capacity(mom.len());
        let mut sizes = Vec::with_capacity(mom.len());
        for (m, m0) in mom.iter().zip(&init) {
            let mass = [dth * (m[0] - m0[0]), th * m[1]];
            let momentum = [dth * (m[2] - m0[2]), th * m[3]];
            values.push([mass[0] + mass[1], momentum[0] + momentum[1]]);
            sizes.push([mass[0].abs() + mass[1].abs(), momentum[0].abs() + momentum[1].abs()]);
        }
        if let Some((tp, pv, ps)) = &self.prev {
            let h = 0.5 * (t - tp);
            for k in 0..values.len() {
                for c in 0..2 {
                    self.residual[k][c] += h * (pv[k][c] + values[k][c]);
                    self.scale[k][c] += h * (ps[k][c] + sizes[k][c]);
                }
            }
        }
        self.prev = Some((t, values, sizes));
        Ok(())
    }

    pub fn finish(&self) -> Vec<WeakResidual> {
        let rel = |x: f64, s: f64| if s > 0.0 { x / s } else { x };
        self.family
            .iter()
            .zip(self.residual.iter().zip(&self.scale))
            .map(|(tf, (r, s))| WeakResidual {
                seed: tf.seed,
                mass: r[0].abs(),
                mass_relative: rel(r[0].abs(), s[0]),
                momentum: r[1].abs(),
                momentum_relative: rel(r[1].abs(), s[1]),
            })
            .collect()
    }
}

/// Weak residuals of a trajectory whose snapshots cover the quadrature interval.
pub fn weak_residual(
    traj: &[FluidState],
    family: &[TestFunction],
    params: &ModelParams,
) -> Result<Vec<WeakResidual>, HarnessError> {
    let (first, last) = match (traj.first(), traj.last()) {
        (Some(a), Some(b)) if traj.len() >= 2 => (a.time, b.time),
        _ => return Err(HarnessError::Config("weak residual needs at least two snapshots".into())),
    };
    let mut acc = WeakResidualAccumulator::new(family, params, first, last - first)?;
    for s in traj {
        acc.push(s)?;
    }
    Ok(acc.finish())
}

/// Largest raw and relative residuals over the family as records.
pub fn weak_records(res: &[WeakResidual], params: &ModelParams) -> Vec<MetricRecord> {
    let reg = &params.regime;
    let worst = |f: fn(&WeakResidual) -> f64| res.iter().map(f).fold(0.0, f64::max);
    [
        ("weak.mass", worst(|r| r.mass)),
        ("weak.mass.rel", worst(|r| r.mass_relative)),
        ("weak.mom", worst(|r| r.momentum)),
        ("weak.mom.rel", worst(|r| r.momentum_relative)),
    ]
    .into_iter()
    .map(|(metric, value)| MetricRecord { m: reg.m, n: reg.n, eps: reg.eps, metric: metric.into(), value, slope: None })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::test_function_family;
    use crate::equilibrium::equilibrium_density;
    use crate::pressure::PressureLaw;
    use crate::regime::validate_regime;
    use crate::solver::{initial_data, InitialDataSpec, PrimitiveSolver, SourceForm, SplitOrder, StepperConfig};
    use crate::spectral::{Field, Grid, Parity, VELOCITY_PARITY};
    use std::sync::Arc;

    fn params() -> ModelParams {
        ModelParams {
            regime: validate_regime(2.0, 1.25, 0.2).unwrap(),
            law: PressureLaw::gamma_law(2.0).unwrap(),
            mu: 1e-2,
            eta: 0.0,
        }
    }

    fn trajectory(dt: f64, t_end: f64) -> Vec<FluidState> {
        let p = params();
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let spec = InitialDataSpec { band: 2.5, amplitude: 0.5, ..Default::default() };
        let s0 = initial_data(&p.regime, &p.law, &g, &spec).unwrap();
        let cfg = StepperConfig {
            dt,
            t_end,
            order: SplitOrder::StiffOuter,
            form: SourceForm::Wave,
            dealias: false,
            mu: p.mu,
            eta: p.eta,
            ..Default::default()
        };
        let mut solver = PrimitiveSolver::new(&s0, &p.regime, &p.law, &cfg).unwrap();
        let mut traj = vec![solver.state()];
        for _ in 0..solver.steps_until(t_end) {
            solver.step().unwrap();
            traj.push(solver.state());
        }
        traj
    }

    #[test]
    fn equilibrium_has_no_residual() {
        let p = params();
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let prof = Arc::new(equilibrium_density(&p.regime, &p.law, &g).unwrap());
        let traj: Vec<FluidState> = (0..5)
            .map(|k| {
                let mut s = FluidState::equilibrium(&g, Arc::clone(&prof));
                s.time = 0.1 * k as f64;
                s
            })
            .collect();
        let fam = test_function_family(&g, 5).unwrap();
        for r in weak_residual(&traj, &fam, &p).unwrap() {
            assert!(r.mass < 1e-11 && r.momentum < 1e-11, "{r:?}");
        }
    }

    #[test]
    fn residual_shrinks_fourfold_under_halving() {
        let p = params();
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let fam = test_function_family(&g, 5).unwrap();
        let worst = |dt: f64| {
            let res = weak_residual(&trajectory(dt, 0.1), &fam, &p).unwrap();
            let mass = res.iter().map(|r| r.mass).fold(0.0, f64::max);
            let mom = res.iter().map(|r| r.momentum).fold(0.0, f64::max);
            (mass, mom)
        };
        let (m1, v1) = worst(2e-3);
        let (m2, v2) = worst(1e-3);
        let ratio = v1 / v2;
        assert!((ratio - 4.0).abs() < 1.2, "momentum ratio {ratio} ({v1} -> {v2})");
        assert!(m2 <= m1.max(1e-13), "mass {m1} -> {m2}");
    }

    #[test]
    fn vertically_varying_test_function_is_rejected() {
        let p = params();
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let mut tf = test_function_family(&g, 5).unwrap().remove(0);
        let bad = Field::from_fn(&g, Parity::Even, |x, _, z| x.cos() * (PI * z).cos());
        let zero = Field::zeros(&g, &[Parity::Even]);
        let zero3 = Field::zeros(&g, &[Parity::Odd]);
        tf.psi = Field::stack(&[&zero, &bad, &zero3]).with_parities(&VELOCITY_PARITY);
        assert!(WeakResidualAccumulator::new(&[tf], &p, 0.0, 1.0).is_err());
    }
}
