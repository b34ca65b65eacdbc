//! Spectral differential operators, vertical averaging and projections.

use std::sync::Arc;

use num_complex::Complex64;

use super::{Field, Grid, Parity, SpectralError, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    Grad,
    Div,
    Curl,
    Laplacian,
    GradH,
    DivH,
    CurlH,
    /// `(-d2, d1)`
    GradHPerp,
    LaplacianH,
    /// `d3` applied componentwise.
    Dz,
}

impl DiffOp {
    pub fn name(self) -> &'static str {
        match self {
            DiffOp::Grad => "grad",
            DiffOp::Div => "div",
            DiffOp::Curl => "curl",
            DiffOp::Laplacian => "laplacian",
            DiffOp::GradH => "grad_h",
            DiffOp::DivH => "div_h",
            DiffOp::CurlH => "curl_h",
            DiffOp::GradHPerp => "grad_h_perp",
            DiffOp::LaplacianH => "laplacian_h",
            DiffOp::Dz => "dz",
        }
    }
}

/// `i k_axis * s`.
pub(crate) fn d(grid: &Grid, s: &[Complex64], axis: usize) -> Vec<Complex64> {
    s.iter()
        .enumerate()
        .map(|(idx, c)| {
            let k = grid.deriv_wavevector(idx)[axis];
            Complex64::new(-k * c.im, k * c.re)
        })
        .collect()
}

fn combine(a: Vec<Complex64>, sa: f64, b: Vec<Complex64>, sb: f64) -> Vec<Complex64> {
    a.into_iter().zip(b).map(|(x, y)| x * sa + y * sb).collect()
}

fn rank_check(op: DiffOp, ok: bool, expected: &'static str, got: usize) -> Result<(), SpectralError> {
    if ok {
        Ok(())
    } else {
        Err(SpectralError::RankMismatch { op: op.name(), expected, got })
    }
}

/// Applies a differential operator to a spectrum.
pub fn diff_spectrum(s: &Spectrum, op: DiffOp) -> Result<Spectrum, SpectralError> {
    let g = Arc::clone(s.grid());
    let r = s.rank();
    let p = |i: usize| s.parity(i);
    let (comps, parity) = match op {
        DiffOp::Grad => {
            rank_check(op, r == 1, "a scalar", r)?;
            let c = s.comp(0);
            (
                vec![d(&g, c, 0), d(&g, c, 1), d(&g, c, 2)],
                vec![p(0), p(0), p(0).flip()],
            )
        }
        DiffOp::Div => {
            rank_check(op, r == 3, "a 3-vector", r)?;
            let mut acc = d(&g, s.comp(0), 0);
            for (a, (x, y)) in acc
                .iter_mut()
                .zip(d(&g, s.comp(1), 1).into_iter().zip(d(&g, s.comp(2), 2)))
            {
                *a += x + y;
            }
            (vec![acc], vec![p(0).join(p(1)).join(p(2).flip())])
        }
        DiffOp::Curl => {
            rank_check(op, r == 3, "a 3-vector", r)?;
            let c0 = combine(d(&g, s.comp(2), 1), 1.0, d(&g, s.comp(1), 2), -1.0);
            let c1 = combine(d(&g, s.comp(0), 2), 1.0, d(&g, s.comp(2), 0), -1.0);
            let c2 = combine(d(&g, s.comp(1), 0), 1.0, d(&g, s.comp(0), 1), -1.0);
            (
                vec![c0, c1, c2],
                vec![
                    p(2).join(p(1).flip()),
                    p(0).flip().join(p(2)),
                    p(1).join(p(0)),
                ],
            )
        }
        DiffOp::Laplacian | DiffOp::LaplacianH => {
            let horizontal = op == DiffOp::LaplacianH;
            let comps = (0..r)
                .map(|i| {
                    s.comp(i)
                        .iter()
                        .enumerate()
                        .map(|(idx, c)| {
                            let k = g.deriv_wavevector(idx);
                            let k2 = k[0] * k[0] + k[1] * k[1] + if horizontal { 0.0 } else { k[2] * k[2] };
                            -k2 * c
                        })
                        .collect()
                })
                .collect();
            (comps, s.parities().to_vec())
        }
        DiffOp::GradH => {
            rank_check(op, r == 1, "a scalar", r)?;
            (vec![d(&g, s.comp(0), 0), d(&g, s.comp(0), 1)], vec![p(0), p(0)])
        }
        DiffOp::GradHPerp => {
            rank_check(op, r == 1, "a scalar", r)?;
            let d2: Vec<Complex64> = d(&g, s.comp(0), 1).into_iter().map(|c| -c).collect();
            (vec![d2, d(&g, s.comp(0), 0)], vec![p(0), p(0)])
        }
        DiffOp::DivH => {
            rank_check(op, r == 2 || r == 3, "a 2- or 3-vector", r)?;
            (
                vec![combine(d(&g, s.comp(0), 0), 1.0, d(&g, s.comp(1), 1), 1.0)],
                vec![p(0).join(p(1))],
            )
        }
        DiffOp::CurlH => {
            rank_check(op, r == 2 || r == 3, "a 2- or 3-vector", r)?;
            (
                vec![combine(d(&g, s.comp(1), 0), 1.0, d(&g, s.comp(0), 1), -1.0)],
                vec![p(0).join(p(1))],
            )
        }
        DiffOp::Dz => {
            let comps = (0..r).map(|i| d(&g, s.comp(i), 2)).collect();
            (comps, s.parities().iter().map(|q| q.flip()).collect())
        }
    };
    Ok(Spectrum::new(&g, comps, parity))
}

/// Applies a differential operator to a field.
pub fn diff_ops(f: &Field, op: DiffOp) -> Result<Field, SpectralError> {
    Ok(diff_spectrum(&f.spectrum(), op)?.to_field())
}

/// Vertical mean `<X>` as a horizontal field and the oscillating part `X - <X>`.
pub fn vertical_split(x: &Field) -> (Field, Field) {
    let g = x.grid();
    let h = g.horizontal();
    let (nh, nv) = (g.nh(), g.nv());
    let mut mean_comps = Vec::with_capacity(x.rank());
    let mut osc = x.clone();
    for c in 0..x.rank() {
        let src = x.comp(c);
        let mut mean = vec![0.0; nh * nh];
        for (col, m) in mean.iter_mut().enumerate() {
            *m = src[col * nv..(col + 1) * nv].iter().sum::<f64>() / nv as f64;
        }
        let dst = osc.comp_mut(c);
        for (col, m) in mean.iter().enumerate() {
            for v in &mut dst[col * nv..(col + 1) * nv] {
                *v -= m;
            }
        }
        mean_comps.push(mean);
    }
    let parity = x.parities().iter().map(|_| Parity::Even).collect();
    (Field::new(&h, mean_comps, parity), osc)
}

/// Vertical average only.
pub fn vertical_mean(x: &Field) -> Field {
    vertical_split(x).0
}

/// Extends a horizontal field to a columnar field on `grid`.
pub fn lift_columnar(mean: &Field, grid: &Arc<Grid>) -> Field {
    assert!(mean.grid().is_horizontal());
    assert_eq!(mean.grid().nh(), grid.nh());
    let nv = grid.nv();
    let comps = (0..mean.rank())
        .map(|c| {
            let src = mean.comp(c);
            let mut out = vec![0.0; grid.len()];
            for (col, &v) in src.iter().enumerate() {
                out[col * nv..(col + 1) * nv].fill(v);
            }
            out
        })
        .collect();
    Field::new(grid, comps, vec![Parity::Even; mean.rank()])
}

/// Returns `Z` with `d3 Z = X` and `<Z> = 0`, for vertically mean-free `X`.
pub fn vertical_antiderivative(x: &Field) -> Result<Field, SpectralError> {
    let s = x.spectrum();
    let g = Arc::clone(x.grid());
    let nzc = g.nzc();
    let mut comps = Vec::with_capacity(s.rank());
    for c in 0..s.rank() {
        let src = s.comp(c);
        let total: f64 = src.iter().map(|v| v.norm_sqr()).sum();
        let mean_part: f64 = src.iter().step_by(nzc).map(|v| v.norm_sqr()).sum();
        let rel = if total > 0.0 { (mean_part / total).sqrt() } else { 0.0 };
        if rel > 1e-10 && mean_part.sqrt() > 1e-12 * (g.len() as f64).sqrt() {
            return Err(SpectralError::NotMeanFree(rel));
        }
        let out: Vec<Complex64> = src
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let k = g.deriv_wavevector(idx)[2];
                if k == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    // v / (i k)
                    Complex64::new(v.im / k, -v.re / k)
                }
            })
            .collect();
        comps.push(out);
    }
    let parity = s.parities().iter().map(|p| p.flip()).collect();
    Ok(Spectrum::new(&g, comps, parity).to_field())
}

/// Leray projection onto divergence-free fields; the zero mode is kept.
pub fn helmholtz(v: &Field) -> Result<Field, SpectralError> {
    if v.rank() != 3 {
        return Err(SpectralError::RankMismatch { op: "helmholtz", expected: "a 3-vector", got: v.rank() });
    }
    let s = v.spectrum();
    let g = Arc::clone(v.grid());
    let mut out = s.clone();
    for idx in 0..g.spec_len() {
        let k = g.deriv_wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let kv = (0..3).map(|i| s.comp(i)[idx] * k[i]).sum::<Complex64>() / k2;
        for i in 0..3 {
            out.comp_mut(i)[idx] -= kv * k[i];
        }
    }
    Ok(out.to_field())
}

/// Horizontal projection `-grad_h_perp (-lap_h)^{-1} curl_h` applied to the
/// first two components; the horizontal mean is removed.
pub fn helmholtz_h(v: &Field) -> Result<Field, SpectralError> {
    if v.rank() != 2 && v.rank() != 3 {
        return Err(SpectralError::RankMismatch { op: "helmholtz_h", expected: "a 2- or 3-vector", got: v.rank() });
    }
    let s = v.spectrum();
    let g = Arc::clone(v.grid());
    let mut c0 = s.comp(0).to_vec();
    let mut c1 = s.comp(1).to_vec();
    for idx in 0..g.spec_len() {
        let k = g.deriv_wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 == 0.0 {
            c0[idx] = Complex64::new(0.0, 0.0);
            c1[idx] = Complex64::new(0.0, 0.0);
            continue;
        }
        // curl multiplier i(k1 v2 - k2 v1); perp-gradient of the stream function
        let kperp_v = (c1[idx] * k[0] - c0[idx] * k[1]) / k2;
        c0[idx] = -kperp_v * k[1];
        c1[idx] = kperp_v * k[0];
    }
    let parity = vec![s.parity(0), s.parity(1)];
    Ok(Spectrum::new(&g, vec![c0, c1], parity).to_field())
}

/// Index of `-x3` for vertical index `iz`.
#[inline]
pub fn mirror_z(iz: usize, nv: usize) -> usize {
    (nv - iz) % nv
}

/// Projects each component onto its parity class under `x3 -> -x3`.
pub fn symmetry_project(f: &Field, parity: &[Parity]) -> Field {
    assert_eq!(parity.len(), f.rank());
    let mut out = f.clone();
    for (c, &p) in parity.iter().enumerate() {
        project_component(out.comp_mut(c), f.grid().nv(), p);
    }
    out.set_parities(parity);
    out
}

/// In-place parity projection of one real component.
pub fn project_component(data: &mut [f64], nv: usize, parity: Parity) {
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
        Parity::None => return,
    };
    if nv == 1 {
        if parity == Parity::Odd {
            data.fill(0.0);
        }
        return;
    }
    for col in data.chunks_mut(nv) {
        for iz in 0..=nv / 2 {
            let jz = mirror_z(iz, nv);
            let a = col[iz];
            let b = col[jz];
            let v = 0.5 * (a + sign * b);
            col[iz] = v;
            col[jz] = sign * v;
        }
    }
}

/// Parity projection of spectral coefficients. Reflecting `x3` maps the
/// coefficient at `(kx, ky, kz)` to the conjugate of the one at `(-kx, -ky, kz)`.
pub fn project_spectrum(grid: &Grid, coeffs: &mut [Complex64], parity: Parity) {
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
        Parity::None => return,
    };
    let (nh, nzc) = (grid.nh(), grid.nzc());
    if grid.is_horizontal() {
        if parity == Parity::Odd {
            coeffs.fill(Complex64::new(0.0, 0.0));
        }
        return;
    }
    for ix in 0..nh {
        let mx = grid.mirror_h(ix);
        for iy in 0..nh {
            let my = grid.mirror_h(iy);
            if (mx, my) < (ix, iy) {
                continue;
            }
            for kz in 0..nzc {
                let a = grid.spec_index(ix, iy, kz);
                let b = grid.spec_index(mx, my, kz);
                let (fa, fb) = (coeffs[a], coeffs[b]);
                coeffs[a] = 0.5 * (fa + sign * fb.conj());
                coeffs[b] = 0.5 * (fb + sign * fa.conj());
            }
        }
    }
}

/// Two-thirds rule: keep modes inside the ellipsoid of normalised radius 2/3.
pub fn dealias_keep(grid: &Grid, idx: usize) -> bool {
    let (ix, iy, kz) = grid.spec_coords(idx);
    let half_h = (grid.nh() / 2) as f64;
    let fx = (ix.min(grid.nh() - ix)) as f64 / half_h;
    let fy = (iy.min(grid.nh() - iy)) as f64 / half_h;
    let fz = if grid.nv() > 1 { kz as f64 / (grid.nv() / 2) as f64 } else { 0.0 };
    fx * fx + fy * fy + fz * fz <= 4.0 / 9.0
}

/// Mask of retained modes under the two-thirds rule.
pub fn dealias_mask(grid: &Grid) -> Vec<bool> {
    (0..grid.spec_len()).map(|idx| dealias_keep(grid, idx)).collect()
}

/// Horizontal perpendicular `(v1, v2) -> (-v2, v1)` of the first two components.
pub fn perp_h(v: &Field) -> Field {
    let a: Vec<f64> = v.comp(1).iter().map(|x| -x).collect();
    Field::new(v.grid(), vec![a, v.comp(0).to_vec()], vec![v.parity(1), v.parity(0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spectral_parity_projection_matches_real_space() {
        let g = grid();
        let f = Field::from_fn(&g, Parity::None, |x, y, z| {
            (x + 0.3).sin() * (PI * z).cos() + (y - 0.2 * x).cos() * (2.0 * PI * z + 0.4).sin() + z
        });
        for p in [Parity::Even, Parity::Odd] {
            let expected = symmetry_project(&f, &[p]);
            let mut s = f.spectrum();
            project_spectrum(&g, s.comp_mut(0), p);
            assert!(s.to_field().max_diff(&expected) < 1e-13);
        }
    }

    fn grid() -> Arc<Grid> {
        Grid::new(16, 8, 4.0 * PI).unwrap()
    }

    fn smooth(grid: &Arc<Grid>, seed: f64) -> Field {
        Field::from_fn(grid, Parity::Even, move |x, y, z| {
            (0.5 * x + seed).sin() * (y + 0.3 * seed).cos() + 0.3 * (PI * z).cos() * (0.5 * y).sin()
                + 0.1 * (2.0 * PI * z + seed).sin()
        })
    }

    #[test]
    fn transform_round_trip_and_parseval() {
        let g = grid();
        let f = smooth(&g, 0.7);
        let s = f.spectrum();
        let back = s.to_field();
        assert!(back.max_diff(&f) < 1e-13 * f.max_abs());
        let rel = (s.l2_norm() - f.l2_norm()).abs() / f.l2_norm();
        assert!(rel < 1e-13);
        let h = Grid::horizontal_only(16, 4.0 * PI).unwrap();
        let f2 = Field::from_fn(&h, Parity::Even, |x, y, _| (0.5 * x).sin() + (y).cos() * 0.2);
        assert!(f2.spectrum().to_field().max_diff(&f2) < 1e-13);
        assert!((f2.spectrum().l2_norm() - f2.l2_norm()).abs() < 1e-12 * f2.l2_norm());
    }

    #[test]
    fn single_mode_gradient_norm() {
        let g = grid();
        let k = [1.5, 2.0, 2.0 * PI];
        let f = Field::from_fn(&g, Parity::None, |x, y, z| (k[0] * x + k[1] * y + k[2] * z).cos());
        let grad = diff_ops(&f, DiffOp::Grad).unwrap();
        let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        assert!((grad.l2_norm() - kn * f.l2_norm()).abs() < 1e-11 * kn * f.l2_norm());
    }

    #[test]
    fn skew_identities() {
        let g = grid();
        let phi = smooth(&g, 0.2);
        let perp = diff_ops(&phi, DiffOp::GradHPerp).unwrap();
        let zero = Field::zeros(&g, &[Parity::Odd]);
        let v = Field::stack(&[&perp, &zero]);
        assert!(diff_ops(&v, DiffOp::Div).unwrap().max_abs() < 1e-12);
        let gh = diff_ops(&phi, DiffOp::GradH).unwrap();
        assert!(diff_ops(&gh, DiffOp::CurlH).unwrap().max_abs() < 1e-12);
        assert!(matches!(diff_ops(&phi, DiffOp::Div), Err(SpectralError::RankMismatch { .. })));
    }

    #[test]
    fn split_and_antiderivative() {
        let g = grid();
        let f = smooth(&g, 1.1);
        let (mean, osc) = vertical_split(&f);
        let (m2, _) = vertical_split(&osc);
        assert!(m2.max_abs() < 1e-13);
        let back = lift_columnar(&mean, &g).add(&osc);
        assert!(back.max_diff(&f) < 1e-13);
        let x = Field::from_fn(&g, Parity::Odd, |_, _, z| PI * (PI * z).cos());
        // cos(pi z) is even, but here we only test the formula
        let z = vertical_antiderivative(&x).unwrap();
        let expected = Field::from_fn(&g, Parity::Odd, |_, _, z| (PI * z).sin());
        assert!(z.max_diff(&expected) < 1e-12);
        let dz = diff_ops(&vertical_antiderivative(&osc).unwrap(), DiffOp::Dz).unwrap();
        assert!(dz.max_diff(&osc) < 1e-12);
        assert!(matches!(vertical_antiderivative(&f), Err(SpectralError::NotMeanFree(_))));
    }

    #[test]
    fn leray_projection() {
        let g = grid();
        let a = smooth(&g, 0.1);
        let b = smooth(&g, 0.9);
        let c = smooth(&g, 2.1);
        let v = Field::stack(&[&a, &b, &c]);
        let hv = helmholtz(&v).unwrap();
        assert!(diff_ops(&hv, DiffOp::Div).unwrap().max_abs() < 1e-12);
        assert!(helmholtz(&hv).unwrap().max_diff(&hv) < 1e-12);
        let orth = hv.inner(&v.sub(&hv)).abs();
        assert!(orth < 1e-10 * v.inner(&v));
        let grad = diff_ops(&a, DiffOp::Grad).unwrap();
        assert!(helmholtz(&grad).unwrap().max_abs() < 1e-12);
        let h2 = helmholtz_h(&v).unwrap();
        assert!(diff_ops(&h2, DiffOp::DivH).unwrap().max_abs() < 1e-12);
        let perp = diff_ops(&a, DiffOp::GradHPerp).unwrap();
        assert!(helmholtz_h(&perp).unwrap().max_diff(&perp) < 1e-12);
    }

    #[test]
    fn parity_projection() {
        let g = grid();
        let f = smooth(&g, 0.4);
        let even = symmetry_project(&f, &[Parity::Even]);
        assert!(symmetry_project(&even, &[Parity::Even]).max_diff(&even) < 1e-15);
        let c = Field::from_fn(&g, Parity::Odd, |_, _, z| (PI * z).cos());
        assert!(symmetry_project(&c, &[Parity::Odd]).max_abs() < 1e-15);
        let s = Field::from_fn(&g, Parity::Odd, |x, _, z| (PI * z).sin() * x.cos());
        assert!(symmetry_project(&s, &[Parity::Odd]).max_diff(&s) < 1e-15);
    }
}
