//! Splitting of the convective term tested against columnar solenoidal
//! fields `psi = (grad_h^perp phi, 0)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::wave::check_cutoff;
use super::DiagnosticsError;
use crate::regime::ScalingRegime;
use crate::solver::FluidState;
use crate::spectral::lp::lp_cutoff;
use crate::spectral::ops::{diff_ops, lift_columnar, vertical_mean, vertical_split, DiffOp};
use crate::spectral::{Field, Grid, Parity, VELOCITY_PARITY};

/// Number of members of [`test_function_family`].
pub const FAMILY_SIZE: usize = 8;

/// Admissibility tolerance for `div psi` and `d3 psi`, relative to `k_max ||psi||_inf`.
const ADMISSIBLE_TOL: f64 = 1e-12;

/// Columnar solenoidal test field `psi = (grad_h^perp phi, 0)` on a 3D grid.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub seed: u64,
    pub phi: Field,
    pub psi: Field,
}

impl TestFunction {
    /// Builds `psi` from a horizontal potential given on the horizontal grid.
    pub fn from_potential(grid: &Arc<Grid>, phi_h: &Field, seed: u64) -> Result<TestFunction, DiagnosticsError> {
        let phi = lift_columnar(phi_h, grid);
        let perp = diff_ops(&phi, DiffOp::GradHPerp)?;
        let zero = Field::zeros(grid, &[Parity::Odd]);
        let psi = Field::stack(&[&perp, &zero]).with_parities(&VELOCITY_PARITY);
        Ok(TestFunction { seed, phi, psi })
    }

    /// Checks `div psi = 0` and `d3 psi = 0`.
    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        if self.psi.rank() != 3 {
            return Err(DiagnosticsError::BadTestFunction(format!("rank {} instead of 3", self.psi.rank())));
        }
        let tol = ADMISSIBLE_TOL * self.psi.max_abs().max(f64::MIN_POSITIVE) * self.psi.grid().k_max();
        let div = diff_ops(&self.psi, DiffOp::Div)?.max_abs();
        if div > tol {
            return Err(DiagnosticsError::BadTestFunction(format!("|div psi| = {div:.3e}")));
        }
        let dz = diff_ops(&self.psi, DiffOp::Dz)?.max_abs();
        if dz > tol {
            return Err(DiagnosticsError::BadTestFunction(format!("|d3 psi| = {dz:.3e}")));
        }
        Ok(())
    }

    /// Horizontal part of `psi` on the horizontal grid.
    pub fn psi_h(&self) -> Field {
        vertical_mean(&self.psi.leading(2))
    }
}

/// Gaussian window of width `lh / 10` around `centre`, in periodic distance.
fn window(lh: f64, centre: [f64; 2], x: f64, y: f64) -> f64 {
    let wrap = |d: f64| d - lh * (d / lh).round();
    let (dx, dy) = (wrap(x - centre[0]), wrap(y - centre[1]));
    let sigma = lh / 10.0;
    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
}

/// Family of [`FAMILY_SIZE`] test functions: Gaussian-windowed low
/// harmonics with wavenumbers up to three fundamentals, one seed per member.
pub fn test_function_family(grid: &Arc<Grid>, seed: u64) -> Result<Vec<TestFunction>, DiagnosticsError> {
    let h = grid.horizontal();
    let lh = grid.lh();
    let base = 2.0 * PI / lh;
    (0..FAMILY_SIZE as u64)
        .map(|i| {
            let member_seed = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(member_seed);
            let (kx, ky) = loop {
                let k: (i32, i32) = (rng.gen_range(-3..=3), rng.gen_range(-3..=3));
                if k != (0, 0) {
                    break k;
                }
            };
            let phase = rng.gen_range(0.0..2.0 * PI);
            let centre = [rng.gen_range(0.0..lh), rng.gen_range(0.0..lh)];
            let phi = Field::from_fn(&h, Parity::Even, |x, y, _| {
                window(lh, centre, x, y) * (base * (kx as f64 * x + ky as f64 * y) + phase).cos()
            });
            TestFunction::from_potential(grid, &phi, member_seed)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvectiveSplit {
    pub cutoff: i32,
    /// `int div_h(<V^h_M> (x) <V^h_M>) . psi^h`
    pub t1: f64,
    /// `int div_h <V~^h_M (x) V~^h_M> . psi^h`
    pub t2: f64,
    /// `|int rho u (x) u : grad psi - int V_M (x) V_M : grad psi|`
    pub gap: f64,
    /// residual of `-int V_M (x) V_M : grad psi = t1 + t2` relative to
    /// `int |V_M|^2 |grad psi|`
    pub split_residual: f64,
}

/// `int A : grad psi` with `A_ij = a_i b_j / w` (or `a_i b_j` when `w` is absent).
fn tensor_pairing(a: &Field, weight: Option<&[f64]>, grad_psi: &[Field]) -> f64 {
    let grid = a.grid();
    let mut s = 0.0;
    for idx in 0..grid.len() {
        let w = weight.map_or(1.0, |w| 1.0 / w[idx]);
        for (i, g) in grad_psi.iter().enumerate() {
            for j in 0..3 {
                s += a.comp(i)[idx] * a.comp(j)[idx] * w * g.comp(j)[idx];
            }
        }
    }
    s * grid.cell_volume()
}

/// `int |a|^2 |grad psi|`, the natural size of [`tensor_pairing`].
fn pairing_scale(a: &Field, grad_psi: &[Field]) -> f64 {
    let grid = a.grid();
    let mag = a.magnitude();
    let s: f64 = (0..grid.len())
        .map(|idx| {
            let g2: f64 = grad_psi.iter().flat_map(|g| (0..3).map(move |j| g.comp(j)[idx].powi(2))).sum();
            mag[idx] * mag[idx] * g2.sqrt()
        })
        .sum();
    s * grid.cell_volume()
}

/// `div_h` of the horizontal tensor `T_ij` given row by row on the horizontal grid.
fn div_h_tensor(rows: [[Vec<f64>; 2]; 2], h: &Arc<Grid>) -> Result<Field, DiagnosticsError> {
    let [r0, r1] = rows;
    let d0 = diff_ops(&Field::new(h, r0.to_vec(), vec![Parity::Even; 2]), DiffOp::DivH)?;
    let d1 = diff_ops(&Field::new(h, r1.to_vec(), vec![Parity::Even; 2]), DiffOp::DivH)?;
    Ok(Field::stack(&[&d0, &d1]))
}

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

pub fn convective_split(
    state: &FluidState,
    m: i32,
    testfn: &TestFunction,
    regime: &ScalingRegime,
) -> Result<ConvectiveSplit, DiagnosticsError> {
    let grid = state.grid();
    check_cutoff(grid, m)?;
    testfn.validate()?;
    let h = grid.horizontal();
    let rho = state.density(regime.mach());
    crate::solver::check_positive(rho.comp(0))?;

    let grad_psi: Vec<Field> = (0..3)
        .map(|i| diff_ops(&testfn.psi.component(i), DiffOp::Grad))
        .collect::<Result<_, _>>()?;
    let v_m = lp_cutoff(&state.momentum, m);
    let full = tensor_pairing(&state.momentum, Some(rho.comp(0)), &grad_psi);
    let regularized = tensor_pairing(&v_m, None, &grad_psi);

    let psi_h = testfn.psi_h();
    let (mean, osc) = vertical_split(&v_m.leading(2));
    let a = [mean.comp(0), mean.comp(1)];
    let mean_rows = [
        [product(a[0], a[0]), product(a[0], a[1])],
        [product(a[1], a[0]), product(a[1], a[1])],
    ];
    let t1 = div_h_tensor(mean_rows, &h)?.inner(&psi_h);

    let avg = |i: usize, j: usize| -> Vec<f64> {
        let p = Field::scalar(grid, product(osc.comp(i), osc.comp(j)), Parity::Even);
        vertical_mean(&p).comp(0).to_vec()
    };
    let osc_rows = [[avg(0, 0), avg(0, 1)], [avg(1, 0), avg(1, 1)]];
    let t2 = div_h_tensor(osc_rows, &h)?.inner(&psi_h);

    let scale = pairing_scale(&v_m, &grad_psi);
    let defect = (-regularized - t1 - t2).abs();
    Ok(ConvectiveSplit {
        cutoff: m,
        t1,
        t2,
        gap: (full - regularized).abs(),
        split_residual: if scale > 0.0 { defect / scale } else { defect },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{equilibrium_density, StaticProfile};
    use crate::pressure::PressureLaw;
    use crate::regime::validate_regime;
    use crate::spectral::lp::DyadicLadder;

    fn setup() -> (Arc<Grid>, ScalingRegime, Arc<StaticProfile>) {
        let g = Grid::new(16, 8, 4.0 * PI).unwrap();
        let reg = validate_regime(2.0, 1.25, 0.2).unwrap();
        let law = PressureLaw::gamma_law(2.0).unwrap();
        let prof = equilibrium_density(&reg, &law, &g).unwrap();
        (g, reg, Arc::new(prof))
    }

    fn homogeneous(g: &Arc<Grid>, prof: &StaticProfile) -> Arc<StaticProfile> {
        Arc::new(StaticProfile {
            rho_tilde: vec![1.0; g.nv()],
            r_tilde: vec![0.0; g.nv()],
            ..prof.clone()
        })
    }

    fn state_with(g: &Arc<Grid>, prof: Arc<StaticProfile>, v: [Field; 3], rho1: Field) -> FluidState {
        let momentum = Field::stack(&[&v[0], &v[1], &v[2]]).with_parities(&VELOCITY_PARITY);
        let mut s = FluidState::equilibrium(g, prof);
        s.momentum = momentum;
        s.rho1 = rho1;
        s
    }

    #[test]
    fn family_is_admissible_and_deterministic() {
        let (g, ..) = setup();
        let fam = test_function_family(&g, 7).unwrap();
        assert_eq!(fam.len(), FAMILY_SIZE);
        for t in &fam {
            t.validate().unwrap();
            assert!(t.psi.max_abs() > 0.0);
        }
        let again = test_function_family(&g, 7).unwrap();
        assert_eq!(fam[3].psi.comps(), again[3].psi.comps());
    }

    #[test]
    fn rejects_vertically_varying_field() {
        let (g, ..) = setup();
        let mut t = test_function_family(&g, 1).unwrap().remove(0);
        let bump = Field::from_fn(&g, Parity::Even, |_, _, z| (PI * z).cos());
        t.psi = Field::stack(&[&t.psi.component(0).add(&bump), &t.psi.component(1), &t.psi.component(2)])
            .with_parities(&VELOCITY_PARITY);
        assert!(matches!(t.validate(), Err(DiagnosticsError::BadTestFunction(_))));
    }

    #[test]
    fn columnar_flow_has_no_oscillating_part() {
        let (g, reg, prof) = setup();
        let v = [
            Field::from_fn(&g, Parity::Even, |x, y, _| (0.5 * x).sin() * y.cos()),
            Field::from_fn(&g, Parity::Even, |x, y, _| -(0.5 * x).cos() * y.sin() * 0.5),
            Field::zeros(&g, &[Parity::Odd]),
        ];
        let rho1 = Field::from_fn(&g, Parity::Even, |x, _, z| 0.3 * x.cos() * (PI * z).cos());
        let state = state_with(&g, prof, v, rho1);
        let top = DyadicLadder::for_grid(&g).j_max;
        for t in test_function_family(&g, 3).unwrap() {
            let s = convective_split(&state, top, &t, &reg).unwrap();
            assert!(s.t2.abs() < 1e-13, "{s:?}");
            assert!(s.split_residual < 1e-10, "{s:?}");
        }
    }

    #[test]
    fn potential_flow_leaves_only_divergence_transport() {
        // (a.grad) a = grad |a|^2/2 + curl_h a a^perp; the gradient integrates to zero
        let (g, reg, prof) = setup();
        let chi = Field::from_fn(&g.horizontal(), Parity::Even, |x, y, _| (0.5 * x + y).sin() + 0.4 * (x - 0.5 * y).cos());
        let a = diff_ops(&chi, DiffOp::GradH).unwrap();
        let col = lift_columnar(&a, &g);
        let v = [col.component(0), col.component(1), Field::zeros(&g, &[Parity::Odd])];
        let state = state_with(&g, homogeneous(&g, &prof), v, Field::zeros(&g, &[Parity::Even]));
        let top = DyadicLadder::for_grid(&g).j_max;
        let div = diff_ops(&a, DiffOp::DivH).unwrap();
        let transport = a.times_scalar(&div);
        for t in test_function_family(&g, 11).unwrap() {
            let s = convective_split(&state, top, &t, &reg).unwrap();
            let expected = transport.inner(&t.psi_h());
            assert!((s.t1 - expected).abs() < 1e-10 * expected.abs().max(1.0), "{} vs {}", s.t1, expected);
        }
    }

    #[test]
    fn gap_vanishes_for_homogeneous_band_limited_state() {
        let (g, reg, prof) = setup();
        let v = [
            Field::from_fn(&g, Parity::Even, |x, y, z| (0.5 * x).sin() * (PI * z).cos() + y.cos()),
            Field::from_fn(&g, Parity::Even, |x, y, _| (x + y).cos()),
            Field::from_fn(&g, Parity::Odd, |x, _, z| 0.5 * (0.5 * x).cos() * (PI * z).sin()),
        ];
        let state = state_with(&g, homogeneous(&g, &prof), v, Field::zeros(&g, &[Parity::Even]));
        let top = DyadicLadder::for_grid(&g).j_max;
        for t in test_function_family(&g, 5).unwrap() {
            let s = convective_split(&state, top, &t, &reg).unwrap();
            assert!(s.gap < 1e-10, "{s:?}");
            assert!(s.split_residual < 1e-10, "{s:?}");
        }
    }

    #[test]
    fn gap_decreases_with_cutoff() {
        let (g, reg, prof) = setup();
        let v = [
            Field::from_fn(&g, Parity::Even, |x, y, z| (0.5 * x).sin() * (PI * z).cos() + (3.0 * y).cos()),
            Field::from_fn(&g, Parity::Even, |x, y, _| (2.5 * x + y).cos()),
            Field::from_fn(&g, Parity::Odd, |x, _, z| 0.5 * (1.5 * x).cos() * (2.0 * PI * z).sin()),
        ];
        let rho1 = Field::from_fn(&g, Parity::Even, |x, y, z| (x - y).sin() * (PI * z).cos());
        let state = state_with(&g, prof, v, rho1);
        let t = test_function_family(&g, 2).unwrap().remove(0);
        let top = DyadicLadder::for_grid(&g).j_max;
        let gaps: Vec<f64> = (0..=top).map(|m| convective_split(&state, m, &t, &reg).unwrap().gap).collect();
        assert!(gaps[top as usize] < gaps[0], "{gaps:?}");
    }
}
