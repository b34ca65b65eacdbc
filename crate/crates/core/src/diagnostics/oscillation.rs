//! Vertically oscillating part of the cut-off momentum: the potential
//! `Phi~^h`, the vertical vorticity `omega~^3`, their evolution equations
//! and the coupling term that appears when `m + 1 = 2n`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::wave::{
    check_cutoff, cutoff_weights, evaluator, gamma_of, norm_spec, regularize, source_spectra,
    spectral_snapshot, ResidualSeries, SpectralSnapshot,
};
use super::{uniform_spacing, DiagnosticsError, ModelParams};
use crate::gravity::GravityPotential;
use crate::regime::ScalingRegime;
use crate::solver::{assemble_sources, FluidState, SourceForm};
use crate::spectral::lp::lp_cutoff;
use crate::spectral::ops::{
    diff_ops, perp_h, vertical_antiderivative, vertical_mean, vertical_split, DiffOp,
};
use crate::spectral::{Field, Grid, Parity};

#[derive(Debug, Clone)]
pub struct OscillationFields {
    /// `(V~^h_M)^perp - d3^{-1} grad_h^perp V~^3_M`
    pub phi: Field,
    /// `curl_h V~^h_M`
    pub omega3: Field,
    /// slow vorticity quantity on the horizontal grid
    pub gamma: Field,
    /// relative residual of `(curl V~_M)^h = d3 Phi~^h`
    pub curl_h_identity: f64,
    /// relative residual of `(curl V~_M)^3 = omega~^3`
    pub curl_v_identity: f64,
    /// largest vertical mean of `Phi~^h` and `omega~^3`
    pub mean_defect: f64,
}

fn rel(diff: f64, size: f64) -> f64 {
    if size > 0.0 {
        diff / size
    } else {
        diff
    }
}

pub fn oscillation_fields(
    state: &FluidState,
    m: i32,
    regime: &ScalingRegime,
) -> Result<OscillationFields, DiagnosticsError> {
    let reg = regularize(state, m)?;
    let (_, osc) = vertical_split(&reg.v_m);
    let lift = vertical_antiderivative(&diff_ops(&osc.component(2), DiffOp::GradHPerp)?)?;
    let phi = perp_h(&osc).sub(&lift);
    let omega3 = diff_ops(&osc.leading(2), DiffOp::CurlH)?;

    let curl = diff_ops(&osc, DiffOp::Curl)?;
    let dz_phi = diff_ops(&phi, DiffOp::Dz)?;
    let curl_h_identity = rel(curl.leading(2).max_diff(&dz_phi), curl.leading(2).max_abs());
    let curl_v_identity = rel(curl.component(2).max_diff(&omega3), omega3.max_abs());
    let mean_defect = vertical_mean(&phi).max_abs().max(vertical_mean(&omega3).max_abs());
    Ok(OscillationFields {
        gamma: gamma_of(state, m, regime)?,
        phi,
        omega3,
        curl_h_identity,
        curl_v_identity,
        mean_defect,
    })
}

/// Residuals of
/// `d_t Phi~ - eps^-1 V~^h = (d3^{-1} curl f~)^h + eps^{m-2n} (d3^{-1} curl g~)^h` and
/// `d_t omega~ + eps^-1 div_h V~^h = curl_h f~^h` along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct OscillationResiduals {
    pub phi: ResidualSeries,
    pub omega: ResidualSeries,
}

/// `(d3^{-1} curl X)^h = (X^h)^perp - d3^{-1} grad_h^perp X^3` per mode; zero
/// where `d3` is not invertible.
#[inline]
fn lifted_curl(k: [f64; 3], x: [Complex64; 3]) -> [Complex64; 2] {
    if k[2] == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    [-x[1] + x[2] * (k[1] / k[2]), x[0] - x[2] * (k[0] / k[2])]
}

#[inline]
fn curl_h(k: [f64; 3], x: [Complex64; 3]) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    i * (x[1] * k[0] - x[0] * k[1])
}

pub fn oscillation_residuals(
    traj: &[FluidState],
    m: i32,
    params: &ModelParams,
) -> Result<OscillationResiduals, DiagnosticsError> {
    let dt = uniform_spacing(traj, 3)?;
    let grid = Arc::clone(traj[0].grid());
    check_cutoff(&grid, m)?;
    let w = cutoff_weights(&grid, m);
    let reg = &params.regime;
    let (rot, rem) = (reg.rotation(), reg.remainder_scale());
    let mut eval = evaluator(&grid, params, &traj[0]);
    let snaps: Vec<SpectralSnapshot> = traj.iter().map(spectral_snapshot).collect();
    let at = |s: &[Vec<Complex64>; 3], idx: usize| [s[0][idx], s[1][idx], s[2][idx]];
    let ns = grid.spec_len();
    let zero = Complex64::new(0.0, 0.0);

    let mut series = (vec![], vec![], vec![], vec![], vec![]);
    for n in 1..traj.len() - 1 {
        let src = source_spectra(&mut eval, &grid, &snaps[n])?;
        let mut phi_res = [vec![zero; ns], vec![zero; ns]];
        let mut phi_dt = phi_res.clone();
        let mut om_res = vec![zero; ns];
        let mut om_dt = vec![zero; ns];
        for idx in 0..ns {
            let k = grid.deriv_wavevector(idx);
            if idx % grid.nzc() == 0 {
                continue; // vertical mean
            }
            let (vp, vc, vn) = (at(&snaps[n - 1].v, idx), at(&snaps[n].v, idx), at(&snaps[n + 1].v, idx));
            let dphi = {
                let (a, b) = (lifted_curl(k, vn), lifted_curl(k, vp));
                [(a[0] - b[0]) * (0.5 / dt), (a[1] - b[1]) * (0.5 / dt)]
            };
            let fl = lifted_curl(k, at(&src.f, idx));
            let gl = lifted_curl(k, at(&src.g, idx));
            if k[2] != 0.0 {
                for c in 0..2 {
                    phi_dt[c][idx] = dphi[c];
                    phi_res[c][idx] = dphi[c] - vc[c] * rot - fl[c] - gl[c] * rem;
                }
            }
            let dom = (curl_h(k, vn) - curl_h(k, vp)) * (0.5 / dt);
            let div_h = Complex64::new(0.0, 1.0) * (vc[0] * k[0] + vc[1] * k[1]);
            om_dt[idx] = dom;
            om_res[idx] = dom + div_h * rot - curl_h(k, at(&src.f, idx));
        }
        let pair = |c: &[Vec<Complex64>; 2]| {
            (norm_spec(&grid, &c[0], &w).powi(2) + norm_spec(&grid, &c[1], &w).powi(2)).sqrt()
        };
        series.0.push(traj[n].time);
        series.1.push(pair(&phi_res));
        series.2.push(pair(&phi_dt));
        series.3.push(norm_spec(&grid, &om_res, &w));
        series.4.push(norm_spec(&grid, &om_dt, &w));
    }
    Ok(OscillationResiduals {
        phi: ResidualSeries::new(series.0.clone(), series.1, series.2, dt),
        omega: ResidualSeries::new(series.0, series.3, series.4, dt),
    })
}

/// Gravity coupling of the oscillations. On the torus with the even
/// extension of the gravity potential, `(curl g~_M)^{h,perp} = grad_h S_M(G' rho1)`;
/// on the upper half, where `G' = -1`, this is `-grad_h rho1~_M` up to the cut-off.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BorderlineReport {
    /// relative residual of `(curl g~_M)^{h,perp} = grad_h S_M(G' rho1)`
    pub identity_residual: f64,
    /// `|| <omega~^3 (d3^{-1} curl g~_M)^{h,perp}> ||_{L^2}`
    pub coupling_l2: f64,
    /// the same term evaluated through the right-hand side of the identity
    pub coupling_alt_l2: f64,
    /// relative difference of the two evaluations
    pub coupling_residual: f64,
}

pub fn borderline_identity(
    state: &FluidState,
    m: i32,
    params: &ModelParams,
) -> Result<BorderlineReport, DiagnosticsError> {
    let grid: &Arc<Grid> = state.grid();
    check_cutoff(grid, m)?;
    let src = assemble_sources(state, &params.regime, &params.law, SourceForm::Wave, params.mu, params.eta)?;
    let (_, g_osc) = vertical_split(&lp_cutoff(&src.g, m));
    let lhs = perp_h(&diff_ops(&g_osc, DiffOp::Curl)?.leading(2));

    let gravity = GravityPotential;
    let nv = grid.nv();
    let slope: Vec<f64> = grid.z_coords().iter().map(|&z| gravity.derivative(z)).collect();
    let weighted: Vec<f64> = state.rho1.comp(0).iter().enumerate().map(|(i, r)| r * slope[i % nv]).collect();
    let weighted = lp_cutoff(&Field::scalar(grid, weighted, Parity::Odd), m);
    let rhs = diff_ops(&weighted, DiffOp::GradH)?;
    let identity_residual = rel(lhs.max_diff(&rhs), rhs.max_abs().max(lhs.max_abs()));

    let osc = oscillation_fields(state, m, &params.regime)?;
    let couple = |x: &Field| -> Result<Field, DiagnosticsError> {
        Ok(vertical_mean(&vertical_antiderivative(x)?.times_scalar(&osc.omega3)))
    };
    let a = couple(&lhs)?;
    let b = couple(&rhs)?;
    let coupling_l2 = a.l2_norm();
    Ok(BorderlineReport {
        identity_residual,
        coupling_l2,
        coupling_alt_l2: b.l2_norm(),
        coupling_residual: rel(a.sub(&b).l2_norm(), coupling_l2),
    })
}
