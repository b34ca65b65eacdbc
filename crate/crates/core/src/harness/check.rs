//! Exact algebraic identities evaluated on seeded random admissible states,
//! without time stepping.

use serde::Serialize;

use super::HarnessError;
use crate::diagnostics::{
    borderline_identity, momentum_decomposition, oscillation_fields, pi_decompose, ModelParams,
};
use crate::pressure::PressureLaw;
use crate::regime::validate_regime;
use crate::solver::{assemble_sources, initial_data, InitialDataSpec, SourceForm};
use crate::spectral::lp::lp_cutoff;
use crate::spectral::ops::{diff_ops, vertical_mean, DiffOp};
use crate::spectral::{Grid, GridSpec};

/// Largest admissible relative residual of an exact identity.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub m: f64,
    pub n: f64,
    pub gamma: f64,
    pub identity: &'static str,
    pub residual: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual < IDENTITY_TOL
    }
}

fn relative(diff: f64, size: f64) -> f64 {
    if size > 0.0 {
        diff / size
    } else {
        diff
    }
}

/// Evaluates every identity for each regime and adiabatic exponent at `eps`,
/// with the cut-off index `cutoff` for the frequency-localised ones, on
/// initial data drawn from `data`.
pub fn identity_suite(
    grid: GridSpec,
    regimes: &[(f64, f64)],
    gammas: &[f64],
    eps: f64,
    cutoff: i32,
    data: &InitialDataSpec,
) -> Result<Vec<IdentityCheck>, HarnessError> {
    let grid = Grid::from_spec(grid)?;
    let mut out = Vec::new();
    for &(m, n) in regimes {
        for &gamma in gammas {
            let regime = validate_regime(m, n, eps)?;
            let law = PressureLaw::gamma_law(gamma)?;
            let params = ModelParams { regime, law, mu: 1e-2, eta: 0.0 };
            let state = initial_data(&regime, &law, &grid, data)?;
            let mut push = |identity: &'static str, residual: f64| {
                out.push(IdentityCheck { m, n, gamma, identity, residual })
            };

            let split = pi_decompose(&state.density(regime.mach()), &state.profile, &regime, &law)?;
            push("pressure_split", split.identity_residual);

            let src = assemble_sources(&state, &regime, &law, SourceForm::Wave, params.mu, params.eta)?;
            let gh = src.g.leading(2);
            let grad_pi = diff_ops(&split.pi, DiffOp::GradH)?.scaled(-1.0);
            push("g_is_pressure_gradient", relative(gh.max_diff(&grad_pi), gh.max_abs()));
            let gh_m = lp_cutoff(&gh, cutoff);
            let curl = diff_ops(&vertical_mean(&gh_m), DiffOp::CurlH)?;
            push("mean_g_curl_free", relative(curl.max_abs(), gh_m.max_abs()));

            let dec = momentum_decomposition(&state, cutoff, &regime)?;
            push("momentum_reconstruction", dec.reconstruction_residual);

            let osc = oscillation_fields(&state, cutoff, &regime)?;
            push("oscillation_curl_h", osc.curl_h_identity);
            push("oscillation_curl_v", osc.curl_v_identity);

            let border = borderline_identity(&state, cutoff, &params)?;
            push("gravity_curl", border.identity_residual);
        }
    }
    Ok(out)
}
