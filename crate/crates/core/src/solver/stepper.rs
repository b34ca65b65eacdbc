use std::sync::Arc;

use num_complex::Complex64;

use super::{
    FluidState, ModePropagator, SolverError, SourceEvaluator, SplitOrder, StepperConfig,
};
use crate::equilibrium::StaticProfile;
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::spectral::ops::project_spectrum;
use crate::spectral::{Field, Grid, Parity, VELOCITY_PARITY};

type Spec = Vec<Complex64>;

/// Largest admissible step: `c_stab` times the smallest of the stratification
/// time `eps^{2n-m}`, the convective CFL time, the explicit viscous limit and
/// the splitting resonance time.
///
/// The last one keeps the fastest acoustic-inertial mode below half a turn
/// per step. Past it the split step couples modes whose rotation per step is
/// a multiple of `pi` with the source terms and grows without bound, even
/// though the fast part is integrated exactly.
pub fn stability_bound(cfg: &StepperConfig, regime: &ScalingRegime, grid: &Grid, u_max: f64) -> f64 {
    let kmax = grid.k_max();
    let strat_time = regime.eps.powf(2.0 * regime.n - regime.m);
    let fastest = (kmax / regime.mach()).hypot(regime.rotation());
    let resonance = std::f64::consts::PI / fastest;
    let cfl = if u_max > 0.0 { 1.0 / (u_max * kmax) } else { f64::INFINITY };
    let nu = 4.0 * cfg.mu / 3.0 + cfg.eta;
    let viscous = if nu > 0.0 { 2.0 / (nu * kmax * kmax) } else { f64::INFINITY };
    cfg.c_stab * strat_time.min(cfl).min(viscous).min(resonance)
}

/// Spectral-state integrator for one trajectory.
pub struct PrimitiveSolver {
    grid: Arc<Grid>,
    regime: ScalingRegime,
    profile: Arc<StaticProfile>,
    cfg: StepperConfig,
    fast: ModePropagator,
    eval: SourceEvaluator,
    r_hat: Spec,
    v_hat: [Spec; 3],
    k1: [Spec; 3],
    k2: [Spec; 3],
    stage: [Spec; 3],
    t0: f64,
    steps: u64,
    dissipated: f64,
}

impl PrimitiveSolver {
    pub fn new(
        state: &FluidState,
        regime: &ScalingRegime,
        law: &PressureLaw,
        cfg: &StepperConfig,
    ) -> Result<PrimitiveSolver, SolverError> {
        let grid = Arc::clone(state.grid());
        let u = state.velocity(regime.mach())?;
        let bound = stability_bound(cfg, regime, &grid, u.lp_norm(f64::INFINITY));
        if !(cfg.dt > 0.0) || cfg.dt > bound {
            return Err(SolverError::StabilityViolation { dt: cfg.dt, bound });
        }
        let fast_dt = match cfg.order {
            SplitOrder::SourceOuter => cfg.dt,
            SplitOrder::StiffOuter => 0.5 * cfg.dt,
        };
        let eval = SourceEvaluator::new(
            &grid,
            regime,
            law,
            &state.profile,
            cfg.form,
            cfg.mu,
            cfg.eta,
            cfg.dealias,
        );
        let zeros = || [0, 1, 2].map(|_| vec![Complex64::new(0.0, 0.0); grid.spec_len()]);
        Ok(PrimitiveSolver {
            fast: ModePropagator::new(&grid, regime, fast_dt),
            eval,
            r_hat: grid.forward(state.rho1.comp(0)),
            v_hat: [0, 1, 2].map(|c| grid.forward(state.momentum.comp(c))),
            k1: zeros(),
            k2: zeros(),
            stage: zeros(),
            t0: state.time,
            steps: 0,
            dissipated: state.dissipated,
            grid,
            regime: *regime,
            profile: Arc::clone(&state.profile),
            cfg: *cfg,
        })
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.cfg.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// Heun step of length `h` for `dV/dt = F(rho1, V)` with `rho1` frozen,
    /// accumulating the dissipation integral alongside.
    fn source_step(&mut self, h: f64) -> Result<(), SolverError> {
        let rate1 = self.eval.tendency(&self.r_hat, &self.v_hat, &mut self.k1)?;
        for c in 0..3 {
            for ((s, v), k) in self.stage[c].iter_mut().zip(&self.v_hat[c]).zip(&self.k1[c]) {
                *s = v + k * h;
            }
        }
        let rate2 = self.eval.tendency(&self.r_hat, &self.stage, &mut self.k2)?;
        for c in 0..3 {
            for ((v, a), b) in self.v_hat[c].iter_mut().zip(&self.k1[c]).zip(&self.k2[c]) {
                *v += (a + b) * (0.5 * h);
            }
        }
        self.dissipated += 0.5 * h * (rate1 + rate2);
        Ok(())
    }

    pub fn step(&mut self) -> Result<(), SolverError> {
        let dt = self.cfg.dt;
        match self.cfg.order {
            SplitOrder::SourceOuter => {
                self.source_step(0.5 * dt)?;
                self.fast.apply(&mut self.r_hat, &mut self.v_hat);
                self.source_step(0.5 * dt)?;
            }
            SplitOrder::StiffOuter => {
                self.fast.apply(&mut self.r_hat, &mut self.v_hat);
                self.source_step(dt)?;
                self.fast.apply(&mut self.r_hat, &mut self.v_hat);
            }
        }
        project_spectrum(&self.grid, &mut self.r_hat, Parity::Even);
        for (c, p) in VELOCITY_PARITY.iter().enumerate() {
            project_spectrum(&self.grid, &mut self.v_hat[c], *p);
        }
        self.steps += 1;
        let norm = self.norm();
        if !norm.is_finite() || norm > self.cfg.ceiling {
            return Err(SolverError::Blowup { time: self.time(), norm });
        }
        Ok(())
    }

    /// `L^2` norm of `(rho1, V)` by Parseval.
    pub fn norm(&self) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for c in std::iter::once(&self.r_hat).chain(self.v_hat.iter()) {
            for (idx, v) in c.iter().enumerate() {
                total += g.spec_weight(idx) * v.norm_sqr();
            }
        }
        (total * g.parseval_factor()).sqrt()
    }

    pub fn state(&self) -> FluidState {
        let g = &self.grid;
        FluidState {
            rho1: Field::scalar(g, g.inverse(&self.r_hat), Parity::Even),
            momentum: Field::new(
                g,
                self.v_hat.iter().map(|c| g.inverse(c)).collect(),
                VELOCITY_PARITY.to_vec(),
            ),
            profile: Arc::clone(&self.profile),
            time: self.time(),
            dissipated: self.dissipated,
        }
    }

    /// Number of steps needed to reach `t_end` from the current time.
    pub fn steps_until(&self, t_end: f64) -> u64 {
        ((t_end - self.time()) / self.cfg.dt).round().max(0.0) as u64
    }

    /// Advances to `t_end`, handing a snapshot to `on_snapshot` at the start,
    /// every `every` steps and at the end.
    pub fn run(
        &mut self,
        t_end: f64,
        every: usize,
        mut on_snapshot: impl FnMut(&FluidState),
    ) -> Result<(), SolverError> {
        let n = self.steps_until(t_end);
        let every = every.max(1) as u64;
        on_snapshot(&self.state());
        for i in 1..=n {
            self.step()?;
            if i % every == 0 || i == n {
                on_snapshot(&self.state());
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> &ScalingRegime {
        &self.regime
    }
}

/// Advances a state by one step.
pub fn step(
    state: &FluidState,
    cfg: &StepperConfig,
    regime: &ScalingRegime,
    law: &PressureLaw,
) -> Result<FluidState, SolverError> {
    let mut s = PrimitiveSolver::new(state, regime, law, cfg)?;
    s.step()?;
    Ok(s.state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::equilibrium_density;
    use crate::regime::validate_regime;
    use crate::solver::{energy_report, initial_data, InitialDataSpec, SourceForm};
    use std::f64::consts::PI;

    fn setup(eps: f64) -> (Arc<Grid>, ScalingRegime, PressureLaw, FluidState) {
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let reg = validate_regime(2.0, 1.25, eps).unwrap();
        let law = PressureLaw::gamma_law(2.0).unwrap();
        let spec = InitialDataSpec { band: 2.5, amplitude: 0.5, ..Default::default() };
        let s = initial_data(&reg, &law, &g, &spec).unwrap();
        (g, reg, law, s)
    }

    fn run(s: &FluidState, reg: &ScalingRegime, law: &PressureLaw, cfg: &StepperConfig, t: f64) -> FluidState {
        let mut solver = PrimitiveSolver::new(s, reg, law, cfg).unwrap();
        for _ in 0..solver.steps_until(t) {
            solver.step().unwrap();
        }
        solver.state()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let reg = validate_regime(1.0, 0.75, 0.1).unwrap();
        let law = PressureLaw::gamma_law(1.6).unwrap();
        let prof = Arc::new(equilibrium_density(&reg, &law, &g).unwrap());
        let s0 = FluidState::equilibrium(&g, prof);
        for form in [SourceForm::Energy, SourceForm::Wave] {
            let cfg = StepperConfig { dt: 1e-3, form, ..Default::default() };
            let s = run(&s0, &reg, &law, &cfg, 0.02);
            assert!(s.rho1.max_abs() < 1e-12 && s.momentum.max_abs() < 1e-12, "{form:?}");
        }
    }

    #[test]
    fn mass_is_conserved_and_parity_kept() {
        let (_, reg, law, s0) = setup(0.2);
        let cfg = StepperConfig { dt: 2e-3, ..Default::default() };
        let s = run(&s0, &reg, &law, &cfg, 0.2);
        assert!(s.mass_defect(reg.mach()).abs() < 1e-12);
        let z = s.rho1.grid().nv();
        // odd vertical momentum vanishes on the planes x3 = 0 and x3 = -1
        for col in 0..s.rho1.grid().nh().pow(2) {
            assert!(s.momentum.comp(2)[col * z].abs() < 1e-12);
            assert!(s.momentum.comp(2)[col * z + z / 2].abs() < 1e-12);
        }
    }

    #[test]
    fn bound_keeps_fast_modes_below_half_a_turn() {
        let g = Grid::new(48, 16, 4.0 * PI).unwrap();
        let cfg = StepperConfig { c_stab: 1.0, ..Default::default() };
        for eps in [0.1, 0.05] {
            let reg = validate_regime(2.0, 1.25, eps).unwrap();
            let dt = stability_bound(&cfg, &reg, &g, 0.0);
            let fastest = (g.k_max() / reg.mach()).hypot(reg.rotation());
            assert!((fastest * dt - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let (_, reg, law, s0) = setup(0.2);
        let cfg = StepperConfig { dt: 10.0, ..Default::default() };
        assert!(matches!(
            PrimitiveSolver::new(&s0, &reg, &law, &cfg),
            Err(SolverError::StabilityViolation { .. })
        ));
    }

    #[test]
    fn self_convergence_is_second_order() {
        let (_, reg, law, s0) = setup(0.2);
        for order in [SplitOrder::SourceOuter, SplitOrder::StiffOuter] {
            let at = |dt: f64| run(&s0, &reg, &law, &StepperConfig { dt, order, ..Default::default() }, 0.1);
            let (a, b, c) = (at(4e-3), at(2e-3), at(1e-3));
            let ratio = a.momentum.sub(&b.momentum).l2_norm() / b.momentum.sub(&c.momentum).l2_norm();
            assert!((ratio.log2() - 2.0).abs() < 0.2, "{order:?}: {}", ratio.log2());
        }
    }

    #[test]
    fn energy_defect_shrinks_fourfold_under_halving() {
        let (_, reg, law, s0) = setup(0.2);
        let defect = |dt: f64| {
            let cfg = StepperConfig { dt, order: SplitOrder::StiffOuter, ..Default::default() };
            let mut solver = PrimitiveSolver::new(&s0, &reg, &law, &cfg).unwrap();
            let mut traj = vec![];
            let every = (0.01 / dt).round() as usize;
            solver.run(0.1, every, |s| traj.push(s.clone())).unwrap();
            energy_report(&traj, &reg, &law).unwrap().max_abs_defect
        };
        let ratio = defect(2e-3) / defect(1e-3);
        assert!((ratio - 4.0).abs() < 1.2, "ratio {ratio}");
    }
}
