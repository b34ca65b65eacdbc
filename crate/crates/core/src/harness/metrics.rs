//! Distances between a 3D run and its limit solution.
//!
//! Each metric is a norm of a linear expression in `(u, rho1, U, q)`, so it can
//! be evaluated both per snapshot (strong, then aggregated in `L^2_t`) and on
//! time averages of the fields (weak in time).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::limit::{NS2DState, ObservedState, QGState};
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::spectral::lp::{lp_cutoff, sobolev_norm};
use crate::spectral::ops::{diff_ops, helmholtz_h, vertical_mean, DiffOp};
use crate::spectral::{Field, Grid, Parity};

/// One named value of a case, with the fitted log-log slope against `eps`
/// once the sweep has three or more points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub m: f64,
    pub n: f64,
    pub eps: f64,
    pub metric: String,
    pub value: f64,
    pub slope: Option<f64>,
}

/// Horizontal velocity and, for the quasi-geostrophic limit, the density
/// perturbation of a limit solution at one instant.
#[derive(Debug, Clone)]
pub struct LimitSnapshot {
    pub time: f64,
    pub velocity: Field,
    pub q: Option<Field>,
}

impl LimitSnapshot {
    pub fn from_ns2d(s: &NS2DState) -> LimitSnapshot {
        LimitSnapshot { time: s.time, velocity: s.velocity(), q: None }
    }

    pub fn from_qg(s: &QGState) -> LimitSnapshot {
        LimitSnapshot { time: s.time, velocity: s.velocity(), q: Some(s.q.clone()) }
    }

    /// Horizontal zero density perturbation for limits that carry none.
    pub fn rho1_or_zero(&self) -> Field {
        self.q.clone().unwrap_or_else(|| Field::zeros(self.velocity.grid(), &[Parity::Even]))
    }
}

/// Parameters shared by every metric evaluation of a case.
#[derive(Debug, Clone)]
pub struct MetricOptions {
    pub regime: ScalingRegime,
    pub law: PressureLaw,
    /// cut-off indices for the frequency-localised defects
    pub cutoffs: Vec<i32>,
    /// half width of the central density window as a fraction of `Lh`
    pub window: f64,
    pub burn_in: f64,
}

/// Window functions on the horizontal and the full grid.
struct Windows {
    smooth_h: Field,
    smooth_3d: Field,
    /// central cells for the strong density metric
    central: Vec<bool>,
}

/// `1` on `|x - lh/2| <= half`, `0` beyond `half + taper`, smooth in between.
fn bump(x: f64, lh: f64, half: f64, taper: f64) -> f64 {
    let d = (x - 0.5 * lh).abs() - half;
    if d <= 0.0 {
        return 1.0;
    }
    if d >= taper {
        return 0.0;
    }
    let s = d / taper;
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    f(1.0 - s) / (f(1.0 - s) + f(s))
}

impl Windows {
    fn new(grid: &Arc<Grid>, window: f64) -> Windows {
        let lh = grid.lh();
        let half = window * lh;
        let taper = (0.5 * lh - half).min(0.25 * lh) * 0.5;
        let w = move |x: f64, y: f64, _z: f64| bump(x, lh, half, taper) * bump(y, lh, half, taper);
        let h = grid.horizontal();
        let (nh, nv) = (grid.nh(), grid.nv());
        let central = (0..grid.len())
            .map(|i| {
                let col = i / nv;
                let (ix, iy) = (col / nh, col % nh);
                let tol = 1e-9 * lh;
                let inside = |x: f64| x >= 0.5 * lh - half - tol && x < 0.5 * lh + half - tol;
                inside(grid.x(ix)) && inside(grid.x(iy))
            })
            .collect();
        Windows {
            smooth_h: Field::from_fn(&h, Parity::Even, w),
            smooth_3d: Field::from_fn(grid, Parity::Even, w),
            central,
        }
    }
}

/// Linear inputs of the metrics; instantaneous or time-averaged.
#[derive(Debug, Clone)]
struct MetricInput {
    velocity: Field,
    rho1: Field,
    density: Field,
    limit_u: Field,
    limit_q: Option<Field>,
}

impl MetricInput {
    fn new(obs: &ObservedState, lim: &LimitSnapshot) -> MetricInput {
        MetricInput {
            velocity: obs.velocity.clone(),
            rho1: obs.rho1.clone(),
            density: obs.density.clone(),
            limit_u: lim.velocity.clone(),
            limit_q: lim.q.clone(),
        }
    }

    fn scaled(&self, a: f64) -> MetricInput {
        MetricInput {
            velocity: self.velocity.scaled(a),
            rho1: self.rho1.scaled(a),
            density: self.density.scaled(a),
            limit_u: self.limit_u.scaled(a),
            limit_q: self.limit_q.as_ref().map(|q| q.scaled(a)),
        }
    }

    fn axpy(&mut self, a: f64, other: &MetricInput) {
        self.velocity.axpy(a, &other.velocity);
        self.rho1.axpy(a, &other.rho1);
        self.density.axpy(a, &other.density);
        self.limit_u.axpy(a, &other.limit_u);
        if let (Some(q), Some(o)) = (self.limit_q.as_mut(), other.limit_q.as_ref()) {
            q.axpy(a, o);
        }
    }
}

fn check_compatible(obs: &ObservedState, lim: &LimitSnapshot) -> Result<(), HarnessError> {
    let g3 = obs.grid();
    let gh = lim.velocity.grid();
    if !gh.is_horizontal() || gh.nh() != g3.nh() || (gh.lh() - g3.lh()).abs() > 1e-12 * g3.lh() {
        return Err(HarnessError::GridMismatch(format!(
            "3D grid {}^2 (Lh {}) against limit grid {}^2 (Lh {})",
            g3.nh(),
            g3.lh(),
            gh.nh(),
            gh.lh()
        )));
    }
    if (obs.time - lim.time).abs() > 1e-9 * obs.time.abs().max(1.0) {
        return Err(HarnessError::GridMismatch(format!(
            "sample times differ: {} against {}",
            obs.time, lim.time
        )));
    }
    Ok(())
}

/// Metric names evaluated for a regime, in output order.
pub fn metric_names(regime: &ScalingRegime, cutoffs: &[i32]) -> Vec<String> {
    let mut names = vec!["d_vel".to_string()];
    names.extend(cutoffs.iter().map(|m| format!("tp_dz.M{m}")));
    names.push("tp_u3".into());
    if regime.is_isotropic() {
        names.push("d_qg".into());
        names.push("geo".into());
    } else {
        names.extend(cutoffs.iter().map(|m| format!("flat.M{m}")));
    }
    names.push("rho_dev".into());
    names
}

fn evaluate(inp: &MetricInput, opts: &MetricOptions, win: &Windows) -> Result<Vec<f64>, HarnessError> {
    let hm1 = |f: &Field, w: &Field| sobolev_norm(&f.times_scalar(w), -1.0);
    let u = &inp.velocity;
    let mut out = Vec::new();

    let projected = helmholtz_h(&vertical_mean(&u.leading(2)))?;
    out.push(hm1(&projected.sub(&inp.limit_u), &win.smooth_h));
    for &m in &opts.cutoffs {
        out.push(hm1(&diff_ops(&lp_cutoff(u, m), DiffOp::Dz)?, &win.smooth_3d));
    }
    out.push(hm1(&u.component(2), &win.smooth_3d));
    if opts.regime.is_isotropic() {
        let q = inp.limit_q.as_ref().ok_or_else(|| {
            HarnessError::GridMismatch("quasi-geostrophic metrics need the limit density".into())
        })?;
        out.push(hm1(&vertical_mean(&inp.rho1).sub(q), &win.smooth_h));
        let mut defect = diff_ops(&inp.rho1, DiffOp::Grad)?;
        defect.comp_mut(0).iter_mut().zip(u.comp(1)).for_each(|(d, v)| *d -= v);
        defect.comp_mut(1).iter_mut().zip(u.comp(0)).for_each(|(d, v)| *d += v);
        out.push(hm1(&defect, &win.smooth_3d));
    } else {
        for &m in &opts.cutoffs {
            out.push(hm1(&diff_ops(&lp_cutoff(&inp.rho1, m), DiffOp::Grad)?, &win.smooth_3d));
        }
    }

    let p = opts.law.gamma().min(2.0);
    let dv = inp.density.grid().cell_volume();
    let sum: f64 = inp
        .density
        .comp(0)
        .iter()
        .zip(&win.central)
        .filter(|(_, &c)| c)
        .map(|(r, _)| (r - 1.0).abs().powf(p))
        .sum();
    out.push((sum * dv).powf(1.0 / p));
    Ok(out)
}

/// Metric values at one instant, in the order of [`metric_names`].
pub fn instant_metrics(
    obs: &ObservedState,
    lim: &LimitSnapshot,
    opts: &MetricOptions,
) -> Result<Vec<(String, f64)>, HarnessError> {
    check_compatible(obs, lim)?;
    let win = Windows::new(obs.grid(), opts.window);
    let values = evaluate(&MetricInput::new(obs, lim), opts, &win)?;
    Ok(metric_names(&opts.regime, &opts.cutoffs).into_iter().zip(values).collect())
}

/// Trapezoid time integral of a field-valued signal.
struct FieldIntegral {
    sum: Option<MetricInput>,
    prev: Option<(f64, MetricInput)>,
    first: f64,
    last: f64,
}

impl FieldIntegral {
    fn new() -> FieldIntegral {
        FieldIntegral { sum: None, prev: None, first: 0.0, last: 0.0 }
    }

    fn push(&mut self, time: f64, inp: MetricInput) {
        match self.prev.take() {
            None => {
                self.first = time;
                self.sum = Some(inp.scaled(0.0));
            }
            Some((t0, p)) => {
                let h = 0.5 * (time - t0);
                let sum = self.sum.as_mut().expect("initialised on the first sample");
                sum.axpy(h, &p);
                sum.axpy(h, &inp);
            }
        }
        self.last = time;
        self.prev = Some((time, inp));
    }

    /// Time average; a single sample is its own average.
    fn average(&self) -> Option<MetricInput> {
        let span = self.last - self.first;
        if span > 0.0 {
            self.sum.as_ref().map(|s| s.scaled(1.0 / span))
        } else {
            self.prev.as_ref().map(|(_, p)| p.clone())
        }
    }
}

/// Streaming accumulator of the convergence metrics along a run.
///
/// `observe_step` feeds the time averages and should see every step;
/// `observe_snapshot` evaluates the strong metrics.
pub struct ConvergenceTracker {
    opts: MetricOptions,
    names: Vec<String>,
    windows: Option<Windows>,
    average: FieldIntegral,
    /// `(time, values)` per snapshot
    pub series: Vec<(f64, Vec<f64>)>,
}

impl ConvergenceTracker {
    pub fn new(opts: MetricOptions) -> ConvergenceTracker {
        let names = metric_names(&opts.regime, &opts.cutoffs);
        ConvergenceTracker { opts, names, windows: None, average: FieldIntegral::new(), series: Vec::new() }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn windows(&mut self, grid: &Arc<Grid>) -> &Windows {
        let window = self.opts.window;
        self.windows.get_or_insert_with(|| Windows::new(grid, window))
    }

    pub fn observe_step(&mut self, obs: &ObservedState, lim: &LimitSnapshot) -> Result<(), HarnessError> {
        check_compatible(obs, lim)?;
        if obs.time >= self.opts.burn_in - 1e-12 {
            self.average.push(obs.time, MetricInput::new(obs, lim));
        }
        Ok(())
    }

    pub fn observe_snapshot(&mut self, obs: &ObservedState, lim: &LimitSnapshot) -> Result<(), HarnessError> {
        check_compatible(obs, lim)?;
        let opts = self.opts.clone();
        let win = self.windows(obs.grid());
        let values = evaluate(&MetricInput::new(obs, lim), &opts, win)?;
        self.series.push((obs.time, values));
        Ok(())
    }

    /// Named aggregates per metric:
    /// `<name>.l2t` is the `L^2_t` norm after the burn-in, `<name>.l2t_all`
    /// the one over the whole run, `<name>.avg` the norm of the time-averaged
    /// fields after the burn-in and `<name>.final` the value at the last snapshot.
    pub fn finish(mut self) -> Result<Vec<(String, f64)>, HarnessError> {
        let burn_in = self.opts.burn_in;
        let mut out = Vec::new();
        let averaged = match self.average.average() {
            Some(inp) => {
                let opts = self.opts.clone();
                let win = self.windows(inp.velocity.grid());
                Some(evaluate(&inp, &opts, win)?)
            }
            None => None,
        };
        for (k, name) in self.names.iter().enumerate() {
            let l2t = |from: f64| {
                let pts: Vec<(f64, f64)> =
                    self.series.iter().filter(|(t, _)| *t >= from - 1e-12).map(|(t, v)| (*t, v[k])).collect();
                if pts.len() == 1 {
                    return pts[0].1.abs();
                }
                pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1.powi(2) + w[1].1.powi(2))).sum::<f64>().sqrt()
            };
            if !self.series.is_empty() {
                out.push((format!("{name}.l2t"), l2t(burn_in)));
                out.push((format!("{name}.l2t_all"), l2t(f64::NEG_INFINITY)));
                out.push((format!("{name}.final"), self.series.last().expect("non-empty").1[k]));
            }
            if let Some(avg) = &averaged {
                out.push((format!("{name}.avg"), avg[k]));
            }
        }
        Ok(out)
    }
}

/// Aggregated metrics of a sampled 3D run against a sampled limit run.
/// Both samplings must coincide; every sample enters both the strong series
/// and the time averages.
pub fn convergence_metrics(
    run3d: &[ObservedState],
    runlimit: &[LimitSnapshot],
    opts: &MetricOptions,
) -> Result<Vec<MetricRecord>, HarnessError> {
    if run3d.len() != runlimit.len() {
        return Err(HarnessError::GridMismatch(format!(
            "{} 3D samples against {} limit samples",
            run3d.len(),
            runlimit.len()
        )));
    }
    let mut tracker = ConvergenceTracker::new(opts.clone());
    for (obs, lim) in run3d.iter().zip(runlimit) {
        tracker.observe_step(obs, lim)?;
        tracker.observe_snapshot(obs, lim)?;
    }
    let reg = &opts.regime;
    Ok(tracker
        .finish()?
        .into_iter()
        .map(|(metric, value)| MetricRecord { m: reg.m, n: reg.n, eps: reg.eps, metric, value, slope: None })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::{ns2d_init, ns2d_step, qg_init, qg_step};
    use crate::regime::validate_regime;
    use crate::spectral::VELOCITY_PARITY;
    use std::f64::consts::PI;

    fn opts(m: f64, n: f64) -> MetricOptions {
        MetricOptions {
            regime: validate_regime(m, n, 0.1).unwrap(),
            law: PressureLaw::gamma_law(2.0).unwrap(),
            cutoffs: vec![2, 3],
            window: 0.25,
            burn_in: 0.0,
        }
    }

    fn seed_velocity(h: &Arc<Grid>) -> Field {
        let stream = Field::from_fn(h, Parity::Even, |x, y, _| (0.5 * x).sin() * y.cos() + 0.4 * (x - 0.5 * y).cos());
        diff_ops(&stream, DiffOp::GradHPerp).unwrap()
    }

    /// Lifted limit runs observed against themselves.
    fn embedded(m: f64) -> (Vec<ObservedState>, Vec<LimitSnapshot>) {
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let h = g.horizontal();
        let u = seed_velocity(&h);
        let u3 = ObservedState::columnar(&g, 0.0, &Field::zeros(&h, &[Parity::Even]), &u).velocity;
        let mut lims = Vec::new();
        if m > 1.0 {
            let mut s = ns2d_init(&u3).unwrap();
            for _ in 0..5 {
                lims.push(LimitSnapshot::from_ns2d(&s));
                s = ns2d_step(&s, 0.01, 0.01).unwrap();
            }
        } else {
            let rho = Field::from_fn(&g, Parity::Even, |x, y, _| (x + y).cos());
            let mut s = qg_init(&rho, &u3).unwrap();
            for _ in 0..5 {
                lims.push(LimitSnapshot::from_qg(&s));
                s = qg_step(&s, 0.01, 0.01).unwrap();
            }
        }
        let obs = lims.iter().map(|l| ObservedState::columnar(&g, l.time, &l.rho1_or_zero(), &l.velocity)).collect();
        (obs, lims)
    }

    #[test]
    fn embedded_limit_has_vanishing_metrics() {
        for (m, n) in [(2.0, 1.25), (1.0, 0.75)] {
            let (obs, lims) = embedded(m);
            let recs = convergence_metrics(&obs, &lims, &opts(m, n)).unwrap();
            assert!(!recs.is_empty());
            for r in recs {
                assert!(r.value < 1e-12, "{} = {}", r.metric, r.value);
            }
        }
    }

    #[test]
    fn names_follow_regime() {
        let aniso = metric_names(&opts(2.0, 1.25).regime, &[3]);
        assert!(aniso.contains(&"flat.M3".to_string()) && !aniso.contains(&"d_qg".to_string()));
        let iso = metric_names(&opts(1.0, 0.75).regime, &[3]);
        assert!(iso.contains(&"d_qg".to_string()) && iso.contains(&"geo".to_string()));
    }

    #[test]
    fn offset_velocity_is_detected_and_averaged() {
        let (mut obs, lims) = embedded(2.0);
        let g = Arc::clone(obs[0].grid());
        // an oscillation with zero time mean over the samples
        let shear = Field::from_fn(&g, Parity::Even, |x, _, z| (0.5 * x).cos() * (PI * z).cos());
        let zero = Field::zeros(&g, &[Parity::Even]);
        let zero3 = Field::zeros(&g, &[Parity::Odd]);
        let pert = Field::stack(&[&shear, &zero, &zero3]).with_parities(&VELOCITY_PARITY);
        let signs = [1.0, -1.0, 1.0, -1.0, 1.0];
        for (o, s) in obs.iter_mut().zip(signs) {
            o.velocity.axpy(s, &pert);
        }
        let recs = convergence_metrics(&obs, &lims, &opts(2.0, 1.25)).unwrap();
        let get = |name: &str| recs.iter().find(|r| r.metric == name).unwrap().value;
        assert!(get("tp_dz.M3.l2t") > 0.1);
        // trapezoid weights 1/2, 1, 1, 1, 1/2 with alternating signs sum to zero
        assert!(get("tp_dz.M3.avg") < 1e-14);
        assert!(get("d_vel.l2t") < 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let (obs, _) = embedded(2.0);
        let other = Grid::horizontal_only(8, 4.0 * PI).unwrap();
        let lim = LimitSnapshot { time: 0.0, velocity: seed_velocity(&other), q: None };
        assert!(matches!(
            instant_metrics(&obs[0], &lim, &opts(2.0, 1.25)),
            Err(HarnessError::GridMismatch(_))
        ));
    }

    #[test]
    fn density_metric_on_window() {
        let (mut obs, lims) = embedded(2.0);
        obs[0].density = obs[0].density.map(|r| r + 0.5);
        let vals = instant_metrics(&obs[0], &lims[0], &opts(2.0, 1.25)).unwrap();
        let (_, dev) = vals.iter().find(|(k, _)| k == "rho_dev").unwrap();
        // |rho - 1| = 1/2 on a window of area (Lh/2)^2
        let expected = 0.5 * (2.0 * PI);
        assert!((dev - expected).abs() < 1e-12, "{dev} vs {expected}");
    }
}
