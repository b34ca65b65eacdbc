//! One case of a plan: a 3D run, its limit solution and every diagnostic.

use serde::Serialize;

use super::metrics::{ConvergenceTracker, LimitSnapshot, MetricOptions, MetricRecord};
use super::weak::{weak_records, WeakResidual, WeakResidualAccumulator};
use super::{ExperimentPlan, HarnessError};
use crate::diagnostics::{
    bound_snapshot, convective_split, gamma_series, test_function_family, BoundRow, ModelParams,
};
use crate::limit::{limit_constraint_check, ns2d_init, ns2d_step, qg_init, qg_step, NS2DState, ObservedState, QGState};
use crate::pressure::PressureLaw;
use crate::regime::{validate_regime, ScalingRegime};
use crate::solver::{
    energy_report, initial_data, stability_bound, FluidState, InitialDataSpec, PrimitiveSolver, SourceForm,
    SplitOrder, StepperConfig,
};
use crate::spectral::Grid;

/// Which trajectory plays the role of the 3D run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseSource {
    /// the primitive solver from ill-prepared data
    Primitive,
    /// the limit solution lifted to a columnar 3D state
    EmbeddedLimit,
}

/// Exponents and `eps` of one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseSpec {
    pub m: f64,
    pub n: f64,
    pub eps: f64,
}

impl CaseSpec {
    pub fn label(&self) -> String {
        format!("m{}_n{}_eps{}", self.m, self.n, self.eps)
    }
}

/// Strong metric values per snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct MetricSeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `values[i][k]` is metric `k` at `times[i]`
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub spec: CaseSpec,
    pub regime: ScalingRegime,
    pub source: CaseSource,
    pub dt: f64,
    pub steps: u64,
    /// admissible step for the initial data
    pub stability_bound: f64,
    pub records: Vec<MetricRecord>,
    pub series: MetricSeries,
    pub bounds: Option<BoundRow>,
    pub weak: Vec<WeakResidual>,
    pub final_state: Option<FluidState>,
    pub final_limit: LimitSnapshot,
}

enum Limit {
    Ns(NS2DState),
    Qg(QGState),
}

impl Limit {
    fn snapshot(&self) -> LimitSnapshot {
        match self {
            Limit::Ns(s) => LimitSnapshot::from_ns2d(s),
            Limit::Qg(s) => LimitSnapshot::from_qg(s),
        }
    }

    fn step(&self, dt: f64, mu: f64) -> Result<Limit, HarnessError> {
        Ok(match self {
            Limit::Ns(s) => Limit::Ns(ns2d_step(s, dt, mu)?),
            Limit::Qg(s) => Limit::Qg(qg_step(s, dt, mu)?),
        })
    }
}

/// Stepper configuration used for every case of a plan.
pub fn stepper_config(plan: &ExperimentPlan) -> StepperConfig {
    StepperConfig {
        dt: plan.dt,
        t_end: plan.t_end,
        order: SplitOrder::StiffOuter,
        form: SourceForm::Energy,
        mu: plan.mu,
        eta: plan.eta,
        ..Default::default()
    }
}

/// Step, step count and snapshot stride of a case: the plan step capped by
/// the stability bound, shortened so that the steps land on `t_end`, with
/// snapshots at the plan spacing in time.
fn case_steps(plan: &ExperimentPlan, bound: f64) -> (f64, u64, u64) {
    let steps = (plan.t_end / plan.dt.min(bound) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    let dt = plan.t_end / steps as f64;
    let spacing = plan.snapshot_every as f64 * plan.dt;
    let every = (spacing / dt).round().max(1.0) as u64;
    (dt, steps, every)
}

fn record(reg: &ScalingRegime, metric: impl Into<String>, value: f64) -> MetricRecord {
    MetricRecord { m: reg.m, n: reg.n, eps: reg.eps, metric: metric.into(), value, slope: None }
}

/// Runs one case; errors carry the case label.
pub fn run_case(plan: &ExperimentPlan, spec: CaseSpec, source: CaseSource) -> Result<RunArtifact, HarnessError> {
    run_case_inner(plan, spec, source).map_err(|e| HarnessError::Case { case: spec.label(), source: Box::new(e) })
}

fn run_case_inner(plan: &ExperimentPlan, spec: CaseSpec, source: CaseSource) -> Result<RunArtifact, HarnessError> {
    let regime = validate_regime(spec.m, spec.n, spec.eps)?;
    let law = PressureLaw::gamma_law(plan.gamma)?;
    let grid = Grid::from_spec(plan.grid)?;
    let data = InitialDataSpec {
        seed: plan.seed,
        amplitude: plan.amplitude,
        band: plan.band,
        ..Default::default()
    };
    let state0 = initial_data(&regime, &law, &grid, &data)?;
    let mut cfg = stepper_config(plan);
    let params = ModelParams { regime, law, mu: plan.mu, eta: plan.eta };
    let u0 = state0.velocity(regime.mach())?;
    let bound = stability_bound(&cfg, &regime, &grid, u0.lp_norm(f64::INFINITY));
    let (dt, steps, every) = case_steps(plan, bound);
    cfg.dt = dt;

    let mut limit = if regime.is_isotropic() {
        Limit::Qg(qg_init(&state0.rho1, &u0)?)
    } else {
        Limit::Ns(ns2d_init(&u0)?)
    };
    let mut solver = match source {
        CaseSource::Primitive => Some(PrimitiveSolver::new(&state0, &regime, &law, &cfg)?),
        CaseSource::EmbeddedLimit => None,
    };

    let mut tracker = ConvergenceTracker::new(MetricOptions {
        regime,
        law,
        cutoffs: plan.cutoffs.clone(),
        window: plan.window,
        burn_in: plan.burn_in,
    });
    let family = test_function_family(&grid, plan.seed)?;
    let mut weak = match source {
        CaseSource::Primitive => Some(WeakResidualAccumulator::new(&family, &params, 0.0, steps as f64 * dt)?),
        CaseSource::EmbeddedLimit => None,
    };
    let mut snapshots: Vec<FluidState> = Vec::new();
    let mut last_obs = None;

    for k in 0..=steps {
        let lim = limit.snapshot();
        let (obs, fluid) = match &solver {
            Some(s) => {
                let st = s.state();
                (ObservedState::from_fluid(&st, &regime)?, Some(st))
            }
            None => (ObservedState::columnar(&grid, lim.time, &lim.rho1_or_zero(), &lim.velocity), None),
        };
        tracker.observe_step(&obs, &lim)?;
        if let (Some(acc), Some(st)) = (weak.as_mut(), fluid.as_ref()) {
            acc.push(st)?;
        }
        if k % every == 0 || k == steps {
            tracker.observe_snapshot(&obs, &lim)?;
        }
        if k % every == 0 {
            snapshots.extend(fluid);
        }
        if k == steps {
            last_obs = Some(obs);
            break;
        }
        if let Some(s) = solver.as_mut() {
            s.step()?;
        }
        limit = limit.step(dt, plan.mu)?;
    }

    let names = tracker.names().to_vec();
    let series = MetricSeries {
        names,
        times: tracker.series.iter().map(|(t, _)| *t).collect(),
        values: tracker.series.iter().map(|(_, v)| v.clone()).collect(),
    };
    let mut records: Vec<MetricRecord> =
        tracker.finish()?.into_iter().map(|(name, value)| record(&regime, name, value)).collect();

    let obs = last_obs.expect("the loop visits the final step");
    let constraints = limit_constraint_check(&obs, &regime)?;
    records.push(record(&regime, "constraint.div_u", constraints.div_u_hm1));
    records.push(record(&regime, "constraint.dz_u", constraints.dz_u_hm1));
    records.push(record(&regime, "constraint.u3", constraints.u3_l2));

    let final_state = solver.as_ref().map(|s| s.state());
    let (bounds, weak_res) = match (&final_state, weak) {
        (Some(fin), Some(acc)) => {
            let res = acc.finish();
            records.extend(weak_records(&res, &params));
            records.extend(primitive_records(&snapshots, fin, &family, &params, plan)?);
            let snaps = snapshots
                .iter()
                .map(|s| bound_snapshot(s, &regime, &law))
                .collect::<Result<Vec<_>, _>>()?;
            let row = BoundRow::from_snapshots(regime.eps, state0.profile.deviation_sup(), &snaps);
            records.extend(bound_records(&row, &regime));
            (Some(row), res)
        }
        _ => (None, Vec::new()),
    };

    Ok(RunArtifact {
        spec,
        regime,
        source,
        dt,
        steps,
        stability_bound: bound,
        records,
        series,
        bounds,
        weak: weak_res,
        final_state,
        final_limit: limit.snapshot(),
    })
}

/// Energy, cut-off wave system and convective splitting of a primitive run.
fn primitive_records(
    snapshots: &[FluidState],
    fin: &FluidState,
    family: &[crate::diagnostics::TestFunction],
    params: &ModelParams,
    plan: &ExperimentPlan,
) -> Result<Vec<MetricRecord>, HarnessError> {
    let reg = &params.regime;
    let mut out = Vec::new();
    let mut traj = snapshots.to_vec();
    if traj.last().map(|s| s.time) != Some(fin.time) {
        traj.push(fin.clone());
    }
    let ledger = energy_report(&traj, reg, &params.law)?;
    let e0 = ledger.initial_energy.max(f64::MIN_POSITIVE);
    out.push(record(reg, "energy.max_defect_rel", ledger.max_defect / e0));
    out.push(record(reg, "energy.max_abs_defect_rel", ledger.max_abs_defect / e0));

    if snapshots.len() >= 3 {
        for &m in &plan.cutoffs {
            let gamma = gamma_series(snapshots, m, params)?;
            let g_scale = gamma.g_max.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            out.push(record(reg, format!("wave.gamma_law.M{m}"), gamma.law.relative));
            out.push(record(reg, format!("wave.curl_g.M{m}"), gamma.curl_g_worst() / g_scale));
        }
    }
    if let Some(tf) = family.first() {
        for &m in &plan.cutoffs {
            let split = convective_split(fin, m, tf, reg)?;
            out.push(record(reg, format!("conv.gap.M{m}"), split.gap));
        }
    }
    Ok(out)
}

fn bound_records(row: &BoundRow, reg: &ScalingRegime) -> Vec<MetricRecord> {
    [
        ("bound.profile_deviation", row.profile_deviation),
        ("bound.momentum_linf", row.momentum_linf),
        ("bound.rho_ess_linf", row.rho_ess_linf),
        ("bound.residual_measure_max", row.residual_measure_max),
        ("bound.rho1_sum_linf", row.rho1_sum_linf),
        ("bound.pi_sum_linf", row.pi_sum_linf),
        ("bound.density_deviation_linf", row.density_deviation_linf),
        ("bound.velocity_l2t_h1", row.velocity_l2t_h1),
    ]
    .into_iter()
    .map(|(k, v)| record(reg, k, v))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_step_lands_on_the_end_time() {
        let plan = ExperimentPlan { dt: 1e-3, t_end: 1.0, snapshot_every: 20, ..Default::default() };
        assert_eq!(case_steps(&plan, 0.03), (1e-3, 1000, 20));
        let (dt, steps, every) = case_steps(&plan, 1.3e-4);
        assert_eq!(steps, 7693);
        assert!(dt <= 1.3e-4 && (dt * steps as f64 - 1.0).abs() < 1e-12);
        assert_eq!(every, 154);
    }
}
