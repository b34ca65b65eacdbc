//! Uniform-bound monitor: essential/residual split of the density, the
//! energy-level norms per snapshot, their aggregation per `eps` and log-log
//! slope fits across a sweep.

use serde::Serialize;

use super::pressure_split::pi_decompose;
use super::DiagnosticsError;
use crate::pressure::PressureLaw;
use crate::regime::ScalingRegime;
use crate::solver::FluidState;
use crate::spectral::lp::sobolev_norm;
use crate::spectral::ops::{diff_ops, DiffOp};

/// Upper end of the essential density band `[rho_star / 2, 2]`.
const ESSENTIAL_CEILING: f64 = 2.0;

/// `true` where the density lies in the essential band `[rho_star / 2, 2]`.
pub fn essential_mask(rho: &[f64], rho_star: f64) -> Vec<bool> {
    let lo = 0.5 * rho_star;
    rho.iter().map(|&r| (lo..=ESSENTIAL_CEILING).contains(&r)).collect()
}

/// Sum-space norm: essential part in `L^2`, residual part in `L^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumNorm {
    pub essential: f64,
    pub residual: f64,
    /// exponent used on the residual set
    pub residual_exponent: f64,
}

impl SumNorm {
    pub fn total(&self) -> f64 {
        self.essential + self.residual
    }
}

pub fn sum_norm(values: &[f64], mask: &[bool], cell_volume: f64, p_res: f64) -> SumNorm {
    let (mut ess, mut res) = (0.0, 0.0);
    for (&v, &keep) in values.iter().zip(mask) {
        if keep {
            ess += v * v;
        } else {
            res += v.abs().powf(p_res);
        }
    }
    SumNorm {
        essential: (ess * cell_volume).sqrt(),
        residual: (res * cell_volume).powf(1.0 / p_res),
        residual_exponent: p_res,
    }
}

/// Energy-level quantities of one snapshot.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundSnapshot {
    pub time: f64,
    /// `||sqrt(rho) u||_{L^2}`
    pub momentum_l2: f64,
    /// `||[(rho - rho~) / eps^m]_ess||_{L^2}`
    pub rho_ess_l2: f64,
    /// measure of the residual set
    pub residual_measure: f64,
    /// `int_res rho^gamma`
    pub rho_res_gamma: f64,
    /// `||grad u + grad u^T - 2/3 div u Id||_{L^2}`
    pub deviatoric_l2: f64,
    pub velocity_h1: f64,
    /// `V` in `L^2 + L^{2 gamma / (gamma + 1)}`
    pub momentum_sum: SumNorm,
    /// `rho1` in `L^2 + L^gamma`
    pub rho1_sum: SumNorm,
    pub pi_l2: f64,
    /// `Pi` in `L^2 + L^1`
    pub pi_sum: SumNorm,
    /// `||rho - 1||_{L^2}`
    pub density_deviation: f64,
}

pub fn bound_snapshot(
    state: &FluidState,
    regime: &ScalingRegime,
    law: &PressureLaw,
) -> Result<BoundSnapshot, DiagnosticsError> {
    let grid = state.grid();
    let dv = grid.cell_volume();
    let gamma = law.gamma();
    let rho = state.density(regime.mach());
    let u = state.velocity(regime.mach())?;
    let mask = essential_mask(rho.comp(0), state.profile.rho_star);

    let momentum_sq: f64 = state
        .momentum
        .magnitude()
        .iter()
        .zip(rho.comp(0))
        .map(|(v, r)| v * v / r)
        .sum();
    let ess_rho1 = sum_norm(state.rho1.comp(0), &mask, dv, gamma);
    let residual_cells = mask.iter().filter(|&&k| !k).count();
    let rho_res_gamma: f64 = rho
        .comp(0)
        .iter()
        .zip(&mask)
        .filter(|(_, &k)| !k)
        .map(|(r, _)| r.powf(gamma))
        .sum::<f64>()
        * dv;

    // deviatoric rate of strain, squared Frobenius norm summed pointwise
    let grads: Vec<_> = (0..3)
        .map(|c| diff_ops(&u.component(c), DiffOp::Grad))
        .collect::<Result<_, _>>()?;
    let mut dev_sq = 0.0;
    for i in 0..grid.len() {
        let div = grads[0].comp(0)[i] + grads[1].comp(1)[i] + grads[2].comp(2)[i];
        for a in 0..3 {
            for b in 0..3 {
                let mut s = grads[a].comp(b)[i] + grads[b].comp(a)[i];
                if a == b {
                    s -= 2.0 / 3.0 * div;
                }
                dev_sq += s * s;
            }
        }
    }

    let split = pi_decompose(&rho, &state.profile, regime, law)?;
    let deviation = rho.map(|r| r - 1.0);
    Ok(BoundSnapshot {
        time: state.time,
        momentum_l2: (momentum_sq * dv).sqrt(),
        rho_ess_l2: ess_rho1.essential,
        residual_measure: residual_cells as f64 * dv,
        rho_res_gamma,
        deviatoric_l2: (dev_sq * dv).sqrt(),
        velocity_h1: sobolev_norm(&u, 1.0),
        momentum_sum: sum_norm(&state.momentum.magnitude(), &mask, dv, 2.0 * gamma / (gamma + 1.0)),
        rho1_sum: ess_rho1,
        pi_l2: split.norms.pi_l2,
        pi_sum: split.norms.pi_sum,
        density_deviation: deviation.l2_norm(),
    })
}

/// Time-aggregated bounds of one run.
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub eps: f64,
    /// `||rho~ - 1||_inf` of the static profile
    pub profile_deviation: f64,
    pub momentum_linf: f64,
    pub rho_ess_linf: f64,
    pub residual_measure_max: f64,
    pub rho_res_gamma_max: f64,
    /// `L^2_t L^2` of the deviatoric strain
    pub deviatoric_l2t: f64,
    /// `L^2_t H^1` of the velocity
    pub velocity_l2t_h1: f64,
    pub momentum_sum_linf: f64,
    pub rho1_sum_linf: f64,
    pub pi_l2_linf: f64,
    pub pi_sum_linf: f64,
    pub density_deviation_linf: f64,
    /// the residual set stayed empty at every snapshot
    pub residual_empty: bool,
}

/// `(int x^2 dt)^{1/2}` by the trapezoidal rule.
fn l2_in_time(times: &[f64], values: &[f64]) -> f64 {
    let s: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] * v[0] + v[1] * v[1]))
        .sum();
    s.sqrt()
}

impl BoundRow {
    pub fn from_snapshots(eps: f64, profile_deviation: f64, snaps: &[BoundSnapshot]) -> BoundRow {
        let max = |f: &dyn Fn(&BoundSnapshot) -> f64| snaps.iter().map(f).fold(0.0, f64::max);
        let times: Vec<f64> = snaps.iter().map(|s| s.time).collect();
        let series = |f: &dyn Fn(&BoundSnapshot) -> f64| snaps.iter().map(f).collect::<Vec<_>>();
        BoundRow {
            eps,
            profile_deviation,
            momentum_linf: max(&|s| s.momentum_l2),
            rho_ess_linf: max(&|s| s.rho_ess_l2),
            residual_measure_max: max(&|s| s.residual_measure),
            rho_res_gamma_max: max(&|s| s.rho_res_gamma),
            deviatoric_l2t: l2_in_time(&times, &series(&|s| s.deviatoric_l2)),
            velocity_l2t_h1: l2_in_time(&times, &series(&|s| s.velocity_h1)),
            momentum_sum_linf: max(&|s| s.momentum_sum.total()),
            rho1_sum_linf: max(&|s| s.rho1_sum.total()),
            pi_l2_linf: max(&|s| s.pi_l2),
            pi_sum_linf: max(&|s| s.pi_sum.total()),
            density_deviation_linf: max(&|s| s.density_deviation),
            residual_empty: snaps.iter().all(|s| s.residual_measure == 0.0),
        }
    }
}

/// Least-squares fit of `ln y = slope ln x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit, DiagnosticsError> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return Err(DiagnosticsError::DegenerateFit);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx < 1e-24 {
        return Err(DiagnosticsError::DegenerateFit);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit { slope, intercept: my - slope * mx, points: pts.len() })
}

/// Measured versus predicted `eps` exponent of one quantity.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeCheck {
    pub quantity: String,
    /// `None` when the quantity vanished (for example an empty residual set)
    pub measured: Option<f64>,
    pub predicted: f64,
    pub note: Option<String>,
}

impl SlopeCheck {
    pub fn within(&self, tol: f64) -> bool {
        self.measured.is_some_and(|s| (s - self.predicted).abs() <= tol)
    }
}

/// Largest over smallest value of a quantity across the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct UniformCheck {
    pub quantity: String,
    pub max: f64,
    pub variation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundLedger {
    pub m: f64,
    pub n: f64,
    pub rows: Vec<BoundRow>,
    pub slopes: Vec<SlopeCheck>,
    pub uniform: Vec<UniformCheck>,
}

impl BoundLedger {
    pub fn slope(&self, quantity: &str) -> Option<&SlopeCheck> {
        self.slopes.iter().find(|s| s.quantity == quantity)
    }

    pub fn uniform(&self, quantity: &str) -> Option<&UniformCheck> {
        self.uniform.iter().find(|s| s.quantity == quantity)
    }
}

/// Tabulates the rows of a sweep (sorted by decreasing `eps`) and fits the
/// `eps` exponents.
pub fn bound_monitor(mut rows: Vec<BoundRow>, regime: &ScalingRegime) -> Result<BoundLedger, DiagnosticsError> {
    if rows.len() < 2 {
        return Err(DiagnosticsError::InsufficientSamples { needed: 2, got: rows.len() });
    }
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let (m, n) = (regime.m, regime.n);
    let strat_exp = 2.0 * (m - n);

    let fit = |name: &str, predicted: f64, f: &dyn Fn(&BoundRow) -> f64| -> SlopeCheck {
        let ys: Vec<f64> = rows.iter().map(f).collect();
        let (measured, note) = if ys.iter().all(|&y| y == 0.0) {
            (None, Some("empty".to_string()))
        } else if ys.iter().any(|&y| y <= 0.0) {
            (None, Some("vanishes for some eps".to_string()))
        } else {
            match loglog_slope(&eps, &ys) {
                Ok(s) => (Some(s.slope), None),
                Err(e) => (None, Some(e.to_string())),
            }
        };
        SlopeCheck { quantity: name.to_string(), measured, predicted, note }
    };
    // the essential part of rho - rho~ is O(eps^m), i.e. rho1 is flat
    let slopes = vec![
        fit("rho_ess", 0.0, &|r| r.rho_ess_linf),
        fit("residual_measure", 2.0 * m, &|r| r.residual_measure_max),
        fit("rho_res_gamma", 2.0 * m, &|r| r.rho_res_gamma_max),
        fit("profile_deviation", strat_exp, &|r| r.profile_deviation),
        fit("density_deviation", strat_exp, &|r| r.density_deviation_linf),
    ];

    let uni = |name: &str, f: &dyn Fn(&BoundRow) -> f64| -> UniformCheck {
        let ys: Vec<f64> = rows.iter().map(f).collect();
        let max = ys.iter().copied().fold(0.0, f64::max);
        let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let variation = if min > 0.0 { max / min } else { f64::INFINITY };
        UniformCheck { quantity: name.to_string(), max, variation }
    };
    let uniform = vec![
        uni("momentum", &|r| r.momentum_linf),
        uni("rho1_sum", &|r| r.rho1_sum_linf),
        uni("pi_sum", &|r| r.pi_sum_linf),
        uni("momentum_sum", &|r| r.momentum_sum_linf),
        uni("deviatoric", &|r| r.deviatoric_l2t),
        uni("velocity_h1", &|r| r.velocity_l2t_h1),
    ];
    Ok(BoundLedger { m, n, rows, slopes, uniform })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::equilibrium::equilibrium_density;
    use crate::regime::validate_regime;
    use crate::spectral::Grid;

    #[test]
    fn slope_of_power_law() {
        let xs = [0.2, 0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let fit = loglog_slope(&xs, &ys).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert_eq!(loglog_slope(&[0.1, 0.1], &[1.0, 2.0]), Err(DiagnosticsError::DegenerateFit));
        assert_eq!(loglog_slope(&[0.1], &[1.0]), Err(DiagnosticsError::DegenerateFit));
    }

    #[test]
    fn sum_norm_splits_by_mask() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let mask = [true, true, false, false];
        let s = sum_norm(&v, &mask, 0.5, 1.0);
        assert!((s.essential - (5.0f64 * 0.5).sqrt()).abs() < 1e-15);
        assert!((s.residual - 3.5).abs() < 1e-15);
        assert_eq!(essential_mask(&[0.2, 0.5, 2.0, 2.1], 0.8), vec![false, true, true, false]);
    }

    #[test]
    fn equilibrium_has_empty_residual_set() {
        let g = Grid::new(8, 8, 6.0).unwrap();
        let law = PressureLaw::gamma_law(2.0).unwrap();
        let mut rows = vec![];
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let reg = validate_regime(2.0, 1.25, eps).unwrap();
            let prof = Arc::new(equilibrium_density(&reg, &law, &g).unwrap());
            let state = FluidState::equilibrium(&g, Arc::clone(&prof));
            let snap = bound_snapshot(&state, &reg, &law).unwrap();
            assert_eq!(snap.rho_ess_l2, 0.0);
            assert_eq!(snap.residual_measure, 0.0);
            assert_eq!(snap.momentum_l2, 0.0);
            assert_eq!(snap.pi_l2, 0.0);
            rows.push(BoundRow::from_snapshots(eps, prof.deviation_sup(), &[snap]));
        }
        let reg = validate_regime(2.0, 1.25, 0.1).unwrap();
        let ledger = bound_monitor(rows, &reg).unwrap();
        assert_eq!(ledger.slope("residual_measure").unwrap().note.as_deref(), Some("empty"));
        let profile = ledger.slope("profile_deviation").unwrap();
        assert!(profile.within(0.1), "{profile:?}");
    }

    #[test]
    fn deviatoric_strain_of_shear() {
        let g = Grid::new(16, 8, 2.0 * std::f64::consts::PI).unwrap();
        let law = PressureLaw::gamma_law(2.0).unwrap();
        let reg = validate_regime(2.0, 1.25, 0.1).unwrap();
        let prof = Arc::new(crate::equilibrium::StaticProfile {
            rho_tilde: vec![1.0; g.nv()],
            r_tilde: vec![0.0; g.nv()],
            ..equilibrium_density(&reg, &law, &g).unwrap()
        });
        let mut state = FluidState::equilibrium(&g, Arc::clone(&prof));
        let shear = crate::spectral::Field::from_fn(&g, crate::spectral::Parity::Even, |_, y, _| y.sin());
        state.momentum.comp_mut(0).copy_from_slice(shear.comp(0));
        let snap = bound_snapshot(&state, &reg, &law).unwrap();
        // |S|^2 = 2 cos^2 y, integral over [0, 2 pi]^2 with unit vertical measure
        let expected = (2.0 * 2.0 * std::f64::consts::PI * std::f64::consts::PI).sqrt();
        assert!((snap.deviatoric_l2 - expected).abs() < 1e-10 * expected);
        assert!((snap.momentum_l2 - shear.l2_norm()).abs() < 1e-12);
    }
}
