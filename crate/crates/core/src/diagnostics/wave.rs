//! Littlewood–Paley regularised wave system, its discrete residual along a
//! trajectory, the momentum decomposition and the slow quantity `gamma`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::{uniform_spacing, DiagnosticsError, ModelParams};
use crate::regime::ScalingRegime;
use crate::solver::{FluidState, SourceEvaluator, SourceForm};
use crate::spectral::lp::{cutoff_multiplier, lp_cutoff, sobolev_norm, DyadicLadder};
use crate::spectral::ops::{diff_ops, vertical_mean, DiffOp};
use crate::spectral::{Field, Grid, Parity, Spectrum, VELOCITY_PARITY};

type Spec = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `(S_M rho1, S_M V)` of one snapshot.
#[derive(Debug, Clone)]
pub struct RegularizedState {
    pub cutoff: i32,
    pub time: f64,
    pub r_m: Field,
    pub v_m: Field,
}

pub(crate) fn check_cutoff(grid: &Grid, m: i32) -> Result<(), DiagnosticsError> {
    let max = DyadicLadder::for_grid(grid).j_max;
    if (0..=max).contains(&m) {
        Ok(())
    } else {
        Err(DiagnosticsError::CutoffOutOfRange { m, max })
    }
}

pub fn regularize(state: &FluidState, m: i32) -> Result<RegularizedState, DiagnosticsError> {
    check_cutoff(state.grid(), m)?;
    Ok(RegularizedState {
        cutoff: m,
        time: state.time,
        r_m: lp_cutoff(&state.rho1, m),
        v_m: lp_cutoff(&state.momentum, m),
    })
}

/// `S_M` multiplier per spectral index.
pub(crate) fn cutoff_weights(grid: &Grid, m: i32) -> Vec<f64> {
    (0..grid.spec_len())
        .map(|idx| {
            let k = grid.wavevector(idx);
            cutoff_multiplier(m, (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt())
        })
        .collect()
}

/// `||S_M f||_{L^2}` from spectral coefficients.
pub(crate) fn norm_spec(grid: &Grid, coeffs: &[Complex64], weights: &[f64]) -> f64 {
    let s: f64 = coeffs
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(idx, (c, w))| grid.spec_weight(idx) * (w * w) * c.norm_sqr())
        .sum();
    (s * grid.parseval_factor()).sqrt()
}

/// `i k_axis c` at one index.
#[inline]
fn dk(grid: &Grid, idx: usize, axis: usize, c: Complex64) -> Complex64 {
    let k = grid.deriv_wavevector(idx)[axis];
    Complex64::new(-k * c.im, k * c.re)
}

pub(crate) struct SpectralSnapshot {
    pub r: Spec,
    pub v: [Spec; 3],
}

pub(crate) fn spectral_snapshot(state: &FluidState) -> SpectralSnapshot {
    let g = state.grid();
    SpectralSnapshot {
        r: g.forward(state.rho1.comp(0)),
        v: [0, 1, 2].map(|c| g.forward(state.momentum.comp(c))),
    }
}

/// Exact-form `f` and `g` spectra of a snapshot.
pub(crate) struct SourceSpectra {
    pub f: [Spec; 3],
    pub g: [Spec; 3],
}

pub(crate) fn source_spectra(
    eval: &mut SourceEvaluator,
    grid: &Grid,
    snap: &SpectralSnapshot,
) -> Result<SourceSpectra, DiagnosticsError> {
    let mut f = [0, 1, 2].map(|_| vec![ZERO; grid.spec_len()]);
    let mut g = f.clone();
    eval.split(&snap.r, &snap.v, &mut f, &mut g)?;
    Ok(SourceSpectra { f, g })
}

pub(crate) fn evaluator(grid: &Arc<Grid>, params: &ModelParams, state: &FluidState) -> SourceEvaluator {
    SourceEvaluator::new(
        grid,
        &params.regime,
        &params.law,
        &state.profile,
        SourceForm::Wave,
        params.mu,
        params.eta,
        false,
    )
}

/// Time series of a discrete residual at the interior snapshots.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualSeries {
    pub times: Vec<f64>,
    /// `L^2` norm of the residual per interior snapshot
    pub values: Vec<f64>,
    /// `L^2` norm of the discrete time derivative term per interior snapshot
    pub scales: Vec<f64>,
    /// `L^2_t L^2` norm of the residual
    pub l2t: f64,
    /// `l2t` divided by the `L^2_t L^2` norm of the time derivative term
    pub relative: f64,
}

impl ResidualSeries {
    pub(crate) fn new(times: Vec<f64>, values: Vec<f64>, scales: Vec<f64>, dt: f64) -> ResidualSeries {
        let l2 = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() * dt).sqrt();
        let (l2t, scale) = (l2(&values), l2(&scales));
        let relative = if scale > 0.0 { l2t / scale } else { l2t };
        ResidualSeries { times, values, scales, l2t, relative }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Residual spectra of the cut-off wave system at interior snapshot `n`,
/// with centred differences in time.
fn residual_spectra(
    grid: &Grid,
    params: &ModelParams,
    prev: &SpectralSnapshot,
    cur: &SpectralSnapshot,
    next: &SpectralSnapshot,
    src: &SourceSpectra,
    dt: f64,
) -> (Spec, [Spec; 3], Spec, [Spec; 3]) {
    let reg = &params.regime;
    let (acoustic, rot, rem) = (1.0 / reg.mach(), reg.rotation(), reg.remainder_scale());
    let inv = 0.5 / dt;
    let n = grid.spec_len();
    let mut mass = vec![ZERO; n];
    let mut mass_dt = vec![ZERO; n];
    let mut mom = [0, 1, 2].map(|_| vec![ZERO; n]);
    let mut mom_dt = mom.clone();
    for idx in 0..n {
        let dr = (next.r[idx] - prev.r[idx]) * inv;
        let div: Complex64 = (0..3).map(|j| dk(grid, idx, j, cur.v[j][idx])).sum();
        mass_dt[idx] = dr;
        mass[idx] = dr + div * acoustic;
        let v = [cur.v[0][idx], cur.v[1][idx], cur.v[2][idx]];
        let coriolis = [-v[1], v[0], ZERO];
        for i in 0..3 {
            let dv = (next.v[i][idx] - prev.v[i][idx]) * inv;
            mom_dt[i][idx] = dv;
            mom[i][idx] = dv + dk(grid, idx, i, cur.r[idx]) * acoustic + coriolis[i] * rot
                - src.f[i][idx]
                - src.g[i][idx] * rem;
        }
    }
    (mass, mom, mass_dt, mom_dt)
}

/// Discrete residual of the cut-off wave system along a trajectory:
/// `d_t r_M + eps^-m div V_M` and
/// `d_t V_M + eps^-m grad r_M + eps^-1 e3 x V_M - f_M - eps^{m-2n} g_M`.
pub fn wave_residual(
    traj: &[FluidState],
    m: i32,
    params: &ModelParams,
) -> Result<(ResidualSeries, ResidualSeries), DiagnosticsError> {
    let dt = uniform_spacing(traj, 3)?;
    let grid = Arc::clone(traj[0].grid());
    check_cutoff(&grid, m)?;
    let w = cutoff_weights(&grid, m);
    let mut eval = evaluator(&grid, params, &traj[0]);
    let snaps: Vec<SpectralSnapshot> = traj.iter().map(spectral_snapshot).collect();
    let (mut times, mut mv, mut ms, mut vv, mut vs) = (vec![], vec![], vec![], vec![], vec![]);
    for n in 1..traj.len() - 1 {
        let src = source_spectra(&mut eval, &grid, &snaps[n])?;
        let (mass, mom, mass_dt, mom_dt) =
            residual_spectra(&grid, params, &snaps[n - 1], &snaps[n], &snaps[n + 1], &src, dt);
        times.push(traj[n].time);
        mv.push(norm_spec(&grid, &mass, &w));
        ms.push(norm_spec(&grid, &mass_dt, &w));
        let vec_norm = |c: &[Spec; 3]| c.iter().map(|x| norm_spec(&grid, x, &w).powi(2)).sum::<f64>().sqrt();
        vv.push(vec_norm(&mom));
        vs.push(vec_norm(&mom_dt));
    }
    Ok((
        ResidualSeries::new(times.clone(), mv, ms, dt),
        ResidualSeries::new(times, vv, vs, dt),
    ))
}

/// Residual fields `(mass, momentum)` at interior snapshot `n` after `S_M`.
pub fn wave_residual_fields(
    traj: &[FluidState],
    n: usize,
    m: i32,
    params: &ModelParams,
) -> Result<(Field, Field), DiagnosticsError> {
    let dt = uniform_spacing(traj, 3)?;
    assert!(n >= 1 && n + 1 < traj.len(), "snapshot {n} is not interior");
    let grid = Arc::clone(traj[0].grid());
    check_cutoff(&grid, m)?;
    let mut eval = evaluator(&grid, params, &traj[0]);
    let snaps: Vec<SpectralSnapshot> = traj[n - 1..=n + 1].iter().map(spectral_snapshot).collect();
    let src = source_spectra(&mut eval, &grid, &snaps[1])?;
    let (mass, mom, _, _) = residual_spectra(&grid, params, &snaps[0], &snaps[1], &snaps[2], &src, dt);
    let mass = lp_cutoff_spec(&grid, mass, Parity::Even, m);
    let [a, b, c] = mom;
    let mom = Spectrum::new(&grid, vec![a, b, c], VELOCITY_PARITY.to_vec());
    let w = cutoff_weights(&grid, m);
    Ok((mass, mom.multiplied(|idx| w[idx]).to_field()))
}

fn lp_cutoff_spec(grid: &Arc<Grid>, coeffs: Spec, parity: Parity, m: i32) -> Field {
    let w = cutoff_weights(grid, m);
    Spectrum::new(grid, vec![coeffs], vec![parity]).multiplied(|idx| w[idx]).to_field()
}

/// `V_M = eps^{2(m-n)} t1 + t2` with `t1 = S_M((rho - 1) u / eps^{2(m-n)})` and `t2 = S_M u`.
#[derive(Debug, Clone)]
pub struct MomentumDecomposition {
    pub t1: Field,
    pub t2: Field,
    pub curl_t1: Field,
    pub curl_t2: Field,
    /// `max |V_M - eps^{2(m-n)} t1 - t2| / max |V_M|`
    pub reconstruction_residual: f64,
    pub norms: DecompositionNorms,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecompositionNorms {
    pub t1_h1: f64,
    pub t1_h2: f64,
    pub t2_h1: f64,
    pub curl_t1_l2: f64,
    pub curl_t2_l2: f64,
}

pub fn momentum_decomposition(
    state: &FluidState,
    m: i32,
    regime: &ScalingRegime,
) -> Result<MomentumDecomposition, DiagnosticsError> {
    check_cutoff(state.grid(), m)?;
    let strat = regime.strat();
    let rho = state.density(regime.mach());
    let u = state.velocity(regime.mach())?;
    let excess = rho.map(|r| (r - 1.0) / strat);
    let t1 = lp_cutoff(&u.times_scalar(&excess).with_parities(&VELOCITY_PARITY), m);
    let t2 = lp_cutoff(&u, m);
    let v_m = lp_cutoff(&state.momentum, m);
    let mut recon = t2.clone();
    recon.axpy(strat, &t1);
    let size = v_m.max_abs();
    let reconstruction_residual = if size > 0.0 { recon.max_diff(&v_m) / size } else { recon.max_abs() };
    let curl_t1 = diff_ops(&t1, DiffOp::Curl)?;
    let curl_t2 = diff_ops(&t2, DiffOp::Curl)?;
    let norms = DecompositionNorms {
        t1_h1: sobolev_norm(&t1, 1.0),
        t1_h2: sobolev_norm(&t1, 2.0),
        t2_h1: sobolev_norm(&t2, 1.0),
        curl_t1_l2: curl_t1.l2_norm(),
        curl_t2_l2: curl_t2.l2_norm(),
    };
    Ok(MomentumDecomposition { t1, t2, curl_t1, curl_t2, reconstruction_residual, norms })
}

/// `gamma = curl_h <V^h_M> - eps^{m-1} <r_M>` as a horizontal field.
pub fn gamma_of(state: &FluidState, m: i32, regime: &ScalingRegime) -> Result<Field, DiagnosticsError> {
    let reg = regularize(state, m)?;
    let mean_v = vertical_mean(&reg.v_m.leading(2));
    let mean_r = vertical_mean(&reg.r_m);
    let mut gamma = diff_ops(&mean_v, DiffOp::CurlH)?;
    gamma.axpy(-regime.eps.powf(regime.m - 1.0), &mean_r);
    Ok(gamma)
}

/// Evolution law `d_t gamma = curl_h <f^h_M>` checked along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub cutoff: i32,
    pub times: Vec<f64>,
    pub gamma_l2: Vec<f64>,
    /// `max |curl_h <g^h_M>|` per snapshot
    pub curl_g_max: Vec<f64>,
    /// `max |g^h_M|` per snapshot, for scale
    pub g_max: Vec<f64>,
    /// residual of the evolution law at interior snapshots
    pub law: ResidualSeries,
    /// `||d_t gamma||_{L^2_t L^2}` over the interior snapshots
    pub dgamma_l2t: f64,
}

impl GammaReport {
    pub fn curl_g_worst(&self) -> f64 {
        self.curl_g_max.iter().copied().fold(0.0, f64::max)
    }
}

pub fn gamma_series(traj: &[FluidState], m: i32, params: &ModelParams) -> Result<GammaReport, DiagnosticsError> {
    let dt = uniform_spacing(traj, 3)?;
    let grid = Arc::clone(traj[0].grid());
    check_cutoff(&grid, m)?;
    let reg = &params.regime;
    let w = cutoff_weights(&grid, m);
    let mut eval = evaluator(&grid, params, &traj[0]);
    let snaps: Vec<SpectralSnapshot> = traj.iter().map(spectral_snapshot).collect();
    let coupling = reg.eps.powf(reg.m - 1.0);
    let nzc = grid.nzc();
    let columns: Vec<usize> = (0..grid.spec_len()).step_by(nzc).collect();
    let gamma_hat = |s: &SpectralSnapshot| -> Spec {
        columns
            .iter()
            .map(|&idx| (dk(&grid, idx, 0, s.v[1][idx]) - dk(&grid, idx, 1, s.v[0][idx]) - s.r[idx] * coupling) * w[idx])
            .collect()
    };
    let gammas: Vec<Spec> = snaps.iter().map(gamma_hat).collect();
    let mean_norm = |c: &[Complex64]| (c.iter().map(|x| x.norm_sqr()).sum::<f64>() * grid.parseval_factor()).sqrt();

    let mut curl_g_max = Vec::with_capacity(traj.len());
    let mut g_max = Vec::with_capacity(traj.len());
    let mut f_curl: Vec<Spec> = Vec::with_capacity(traj.len());
    for snap in &snaps {
        let src = source_spectra(&mut eval, &grid, snap)?;
        let gh = Spectrum::new(
            &grid,
            vec![src.g[0].clone(), src.g[1].clone()],
            vec![Parity::Even, Parity::Even],
        )
        .multiplied(|idx| w[idx])
        .to_field();
        g_max.push(gh.max_abs());
        curl_g_max.push(diff_ops(&vertical_mean(&gh), DiffOp::CurlH)?.max_abs());
        f_curl.push(
            columns
                .iter()
                .map(|&idx| (dk(&grid, idx, 0, src.f[1][idx]) - dk(&grid, idx, 1, src.f[0][idx])) * w[idx])
                .collect(),
        );
    }

    let (mut times, mut values, mut scales) = (vec![], vec![], vec![]);
    for n in 1..traj.len() - 1 {
        let d: Spec = gammas[n + 1].iter().zip(&gammas[n - 1]).map(|(a, b)| (a - b) * (0.5 / dt)).collect();
        let res: Spec = d.iter().zip(&f_curl[n]).map(|(a, b)| a - b).collect();
        times.push(traj[n].time);
        values.push(mean_norm(&res));
        scales.push(mean_norm(&d));
    }
    let law = ResidualSeries::new(times, values, scales, dt);
    let dgamma_l2t = (law.scales.iter().map(|x| x * x).sum::<f64>() * dt).sqrt();
    Ok(GammaReport {
        cutoff: m,
        times: traj.iter().map(|s| s.time).collect(),
        gamma_l2: gammas.iter().map(|g| mean_norm(g)).collect(),
        curl_g_max,
        g_max,
        law,
        dgamma_l2t,
    })
}
