use std::fmt;
use std::cell::RefCell;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Periodic box `[0, Lh)^2 x [-1, 1)` sampled on `nh x nh x nv` points.
///
/// Real arrays are stored `[ix][iy][iz]` with `iz` fastest. Spectral arrays
/// keep the non-negative vertical wavenumbers only (`nzc = nv/2 + 1`), stored
/// `[kx][ky][kz]`. A purely horizontal grid has `nv = 1`.
pub struct Grid {
    nh: usize,
    nv: usize,
    lh: f64,
    nzc: usize,
    /// physical wavenumbers per index
    kh: Vec<f64>,
    kz: Vec<f64>,
    /// wavenumbers used by derivatives (Nyquist zeroed)
    kh_d: Vec<f64>,
    kz_d: Vec<f64>,
    fft_h: Arc<dyn Fft<f64>>,
    ifft_h: Arc<dyn Fft<f64>>,
    r2c: Option<Arc<dyn RealToComplex<f64>>>,
    c2r: Option<Arc<dyn ComplexToReal<f64>>>,
    horizontal: OnceLock<Arc<Grid>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nh: usize,
    pub nv: usize,
    pub lh: f64,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nh", &self.nh)
            .field("nv", &self.nv)
            .field("lh", &self.lh)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec() == other.spec()
    }
}

/// Per-thread transform buffers, reused across calls.
#[derive(Default)]
struct Workspace {
    line: Vec<f64>,
    rscratch: Vec<Complex64>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
    spec: Vec<Complex64>,
}

thread_local! {
    static WORK: RefCell<Workspace> = RefCell::new(Workspace::default());
}

fn fft_index(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

impl Grid {
    /// Three-dimensional grid; `nh` must be even and `nv` a power of two, both at least 8.
    pub fn new(nh: usize, nv: usize, lh: f64) -> Result<Arc<Grid>, SpectralError> {
        if nv == 1 {
            return Err(SpectralError::InvalidGrid(
                "use Grid::horizontal_only for nv = 1".into(),
            ));
        }
        Self::build(nh, nv, lh)
    }

    /// Two-dimensional horizontal grid (`nv = 1`).
    pub fn horizontal_only(nh: usize, lh: f64) -> Result<Arc<Grid>, SpectralError> {
        Self::build(nh, 1, lh)
    }

    pub fn from_spec(spec: GridSpec) -> Result<Arc<Grid>, SpectralError> {
        Self::build(spec.nh, spec.nv, spec.lh)
    }

    fn build(nh: usize, nv: usize, lh: f64) -> Result<Arc<Grid>, SpectralError> {
        let vertical_ok = nv == 1 || (nv >= 8 && nv.is_power_of_two());
        if nh < 8 || nh % 2 != 0 || !vertical_ok {
            return Err(SpectralError::InvalidGrid(format!(
                "need even nh >= 8 and nv a power of two >= 8 (nh = {nh}, nv = {nv})"
            )));
        }
        if !(lh.is_finite() && lh > 0.0) {
            return Err(SpectralError::InvalidGrid(format!("Lh must be positive, got {lh}")));
        }
        let nzc = nv / 2 + 1;
        let dk = 2.0 * std::f64::consts::PI / lh;
        let kh: Vec<f64> = (0..nh).map(|i| dk * fft_index(i, nh)).collect();
        let kh_d: Vec<f64> = (0..nh)
            .map(|i| if i == nh / 2 { 0.0 } else { kh[i] })
            .collect();
        let kz: Vec<f64> = (0..nzc).map(|i| std::f64::consts::PI * i as f64).collect();
        let kz_d: Vec<f64> = (0..nzc)
            .map(|i| if nv > 1 && i == nv / 2 { 0.0 } else { kz[i] })
            .collect();
        let mut planner = FftPlanner::new();
        let fft_h = planner.plan_fft_forward(nh);
        let ifft_h = planner.plan_fft_inverse(nh);
        let (r2c, c2r) = if nv > 1 {
            let mut rp = RealFftPlanner::<f64>::new();
            (Some(rp.plan_fft_forward(nv)), Some(rp.plan_fft_inverse(nv)))
        } else {
            (None, None)
        };
        Ok(Arc::new(Grid {
            nh,
            nv,
            lh,
            nzc,
            kh,
            kz,
            kh_d,
            kz_d,
            fft_h,
            ifft_h,
            r2c,
            c2r,
            horizontal: OnceLock::new(),
        }))
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { nh: self.nh, nv: self.nv, lh: self.lh }
    }
    pub fn nh(&self) -> usize {
        self.nh
    }
    pub fn nv(&self) -> usize {
        self.nv
    }
    pub fn lh(&self) -> f64 {
        self.lh
    }
    pub fn nzc(&self) -> usize {
        self.nzc
    }
    pub fn is_horizontal(&self) -> bool {
        self.nv == 1
    }
    /// Spatial dimension (2 or 3).
    pub fn dim(&self) -> usize {
        if self.nv == 1 {
            2
        } else {
            3
        }
    }
    /// Number of real grid points.
    pub fn len(&self) -> usize {
        self.nh * self.nh * self.nv
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Number of stored spectral coefficients.
    pub fn spec_len(&self) -> usize {
        self.nh * self.nh * self.nzc
    }

    /// The horizontal grid with the same `nh` and `Lh`.
    pub fn horizontal(self: &Arc<Self>) -> Arc<Grid> {
        if self.nv == 1 {
            return Arc::clone(self);
        }
        Arc::clone(self.horizontal.get_or_init(|| {
            Grid::build(self.nh, 1, self.lh).expect("horizontal grid of a valid grid")
        }))
    }

    /// Quadrature weight of one grid cell: horizontal Lebesgue measure times
    /// the vertical torus measure normalised to one.
    pub fn cell_volume(&self) -> f64 {
        let dx = self.lh / self.nh as f64;
        dx * dx / self.nv as f64
    }

    /// Total measure of the domain.
    pub fn volume(&self) -> f64 {
        self.lh * self.lh
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.lh / self.nh as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        if self.nv == 1 {
            0.0
        } else {
            -1.0 + 2.0 * k as f64 / self.nv as f64
        }
    }

    pub fn z_coords(&self) -> Vec<f64> {
        (0..self.nv).map(|k| self.z(k)).collect()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.nh + iy) * self.nv + iz
    }

    #[inline]
    pub fn spec_index(&self, ix: usize, iy: usize, kz: usize) -> usize {
        (ix * self.nh + iy) * self.nzc + kz
    }

    /// Splits a spectral index into `(ix, iy, kz)`.
    #[inline]
    pub fn spec_coords(&self, idx: usize) -> (usize, usize, usize) {
        let kz = idx % self.nzc;
        let rest = idx / self.nzc;
        (rest / self.nh, rest % self.nh, kz)
    }

    /// Physical wavevector of a spectral index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, kz) = self.spec_coords(idx);
        [self.kh[ix], self.kh[iy], self.kz[kz]]
    }

    /// Wavevector used for differentiation (Nyquist components set to zero).
    #[inline]
    pub fn deriv_wavevector(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, kz) = self.spec_coords(idx);
        [self.kh_d[ix], self.kh_d[iy], self.kz_d[kz]]
    }

    pub fn kh_values(&self) -> &[f64] {
        &self.kh
    }
    pub fn kz_values(&self) -> &[f64] {
        &self.kz
    }
    pub fn kh_deriv(&self) -> &[f64] {
        &self.kh_d
    }
    pub fn kz_deriv(&self) -> &[f64] {
        &self.kz_d
    }

    /// Largest physical wavenumber magnitude on the grid.
    pub fn k_max(&self) -> f64 {
        let kh = self.kh[self.nh / 2].abs();
        let kz = self.kz[self.nzc - 1];
        (2.0 * kh * kh + kz * kz).sqrt()
    }

    /// Half-spectrum multiplicity of a vertical index (how many full-spectrum
    /// coefficients the stored one stands for).
    #[inline]
    pub fn kz_weight(&self, kz: usize) -> f64 {
        if kz == 0 || (self.nv > 1 && kz == self.nv / 2) {
            1.0
        } else {
            2.0
        }
    }

    /// Multiplicity of a stored spectral index.
    #[inline]
    pub fn spec_weight(&self, idx: usize) -> f64 {
        self.kz_weight(idx % self.nzc)
    }

    /// Factor turning `sum_k w |F_k|^2` into `int |f|^2 dx`.
    pub fn parseval_factor(&self) -> f64 {
        self.cell_volume() / self.len() as f64
    }

    /// Index of the mirrored horizontal wavenumber `-k`.
    #[inline]
    pub fn mirror_h(&self, i: usize) -> usize {
        (self.nh - i) % self.nh
    }

    /// Forward transform (unnormalised).
    pub fn forward(&self, real: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec_len()];
        self.forward_into(real, &mut out);
        out
    }

    /// Inverse transform including the `1/N` normalisation.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.inverse_into(spec, &mut out);
        out
    }

    pub fn forward_into(&self, real: &[f64], out: &mut [Complex64]) {
        assert_eq!(real.len(), self.len());
        assert_eq!(out.len(), self.spec_len());
        let (nh, nv, nzc) = (self.nh, self.nv, self.nzc);
        match &self.r2c {
            Some(r2c) => WORK.with(|w| {
                let w = &mut *w.borrow_mut();
                w.line.resize(nv, 0.0);
                w.rscratch.resize(r2c.get_scratch_len(), Complex64::new(0.0, 0.0));
                for col in 0..nh * nh {
                    w.line.copy_from_slice(&real[col * nv..(col + 1) * nv]);
                    r2c.process_with_scratch(
                        &mut w.line,
                        &mut out[col * nzc..(col + 1) * nzc],
                        &mut w.rscratch,
                    )
                    .expect("real-to-complex transform");
                }
            }),
            None => {
                for (o, &r) in out.iter_mut().zip(real) {
                    *o = Complex64::new(r, 0.0);
                }
            }
        }
        self.horizontal_pass(out, &self.fft_h);
    }

    pub fn inverse_into(&self, spec: &[Complex64], out: &mut [f64]) {
        assert_eq!(spec.len(), self.spec_len());
        let mut work = WORK.with(|w| std::mem::take(&mut w.borrow_mut().spec));
        work.clear();
        work.extend_from_slice(spec);
        self.inverse_destroying(&mut work, out);
        WORK.with(|w| w.borrow_mut().spec = work);
    }

    /// Inverse transform that uses `spec` as workspace and leaves it overwritten.
    pub fn inverse_destroying(&self, spec: &mut [Complex64], out: &mut [f64]) {
        assert_eq!(spec.len(), self.spec_len());
        assert_eq!(out.len(), self.len());
        let (nh, nv, nzc) = (self.nh, self.nv, self.nzc);
        self.horizontal_pass(spec, &self.ifft_h);
        let norm = 1.0 / self.len() as f64;
        match &self.c2r {
            Some(c2r) => WORK.with(|w| {
                let w = &mut *w.borrow_mut();
                w.rscratch.resize(c2r.get_scratch_len(), Complex64::new(0.0, 0.0));
                for col in 0..nh * nh {
                    let line = &mut spec[col * nzc..(col + 1) * nzc];
                    line[0].im = 0.0;
                    line[nzc - 1].im = 0.0;
                    let dst = &mut out[col * nv..(col + 1) * nv];
                    c2r.process_with_scratch(line, dst, &mut w.rscratch)
                        .expect("complex-to-real transform");
                    for v in dst.iter_mut() {
                        *v *= norm;
                    }
                }
            }),
            None => {
                for (o, c) in out.iter_mut().zip(spec.iter()) {
                    *o = c.re * norm;
                }
            }
        }
    }

    /// Transforms along both horizontal axes in place.
    fn horizontal_pass(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let (nh, nzc) = (self.nh, self.nzc);
        WORK.with(|w| {
            let w = &mut *w.borrow_mut();
            w.scratch.resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
            w.buf.resize(nh * nh * nzc, Complex64::new(0.0, 0.0));
            let (buf, scratch) = (&mut w.buf, &mut w.scratch);
            // y axis: lines indexed by (ix, kz)
            for ix in 0..nh {
                let block = &data[ix * nh * nzc..(ix + 1) * nh * nzc];
                let tb = &mut buf[ix * nh * nzc..(ix + 1) * nh * nzc];
                for iy in 0..nh {
                    for kz in 0..nzc {
                        tb[kz * nh + iy] = block[iy * nzc + kz];
                    }
                }
            }
            plan.process_with_scratch(buf, scratch);
            for ix in 0..nh {
                let block = &mut data[ix * nh * nzc..(ix + 1) * nh * nzc];
                let tb = &buf[ix * nh * nzc..(ix + 1) * nh * nzc];
                for iy in 0..nh {
                    for kz in 0..nzc {
                        block[iy * nzc + kz] = tb[kz * nh + iy];
                    }
                }
            }
            // x axis: lines indexed by (iy, kz), transposed in tiles
            let plane = nh * nzc;
            const TILE: usize = 16;
            for j0 in (0..plane).step_by(TILE) {
                let j1 = (j0 + TILE).min(plane);
                for ix in 0..nh {
                    let src = &data[ix * plane + j0..ix * plane + j1];
                    for (dj, v) in src.iter().enumerate() {
                        buf[(j0 + dj) * nh + ix] = *v;
                    }
                }
            }
            plan.process_with_scratch(buf, scratch);
            for j0 in (0..plane).step_by(TILE) {
                let j1 = (j0 + TILE).min(plane);
                for ix in 0..nh {
                    let dst = &mut data[ix * plane + j0..ix * plane + j1];
                    for (dj, v) in dst.iter_mut().enumerate() {
                        *v = buf[(j0 + dj) * nh + ix];
                    }
                }
            }
        });
    }

    /// Exact spectral derivative `d/dx_axis` of a real array.
    pub fn derivative(&self, real: &[f64], axis: usize) -> Vec<f64> {
        let mut s = self.forward(real);
        self.apply_derivative(&mut s, axis);
        self.inverse(&s)
    }

    /// Multiplies a spectrum by `i k_axis`.
    pub fn apply_derivative(&self, spec: &mut [Complex64], axis: usize) {
        for (idx, c) in spec.iter_mut().enumerate() {
            let k = self.deriv_wavevector(idx)[axis];
            *c = Complex64::new(-k * c.im, k * c.re);
        }
    }

    /// Spectral derivative of a vertical profile sampled at `z_coords()`.
    pub fn vertical_derivative(&self, profile: &[f64]) -> Vec<f64> {
        assert_eq!(profile.len(), self.nv);
        let Some(r2c) = &self.r2c else {
            return vec![0.0; self.nv];
        };
        let c2r = self.c2r.as_ref().expect("paired inverse plan");
        let mut line = profile.to_vec();
        let mut spec = r2c.make_output_vec();
        r2c.process(&mut line, &mut spec).expect("real-to-complex transform");
        for (kz, c) in spec.iter_mut().enumerate() {
            let k = self.kz_d[kz];
            *c = Complex64::new(-k * c.im, k * c.re) / self.nv as f64;
        }
        spec[0].im = 0.0;
        let last = spec.len() - 1;
        spec[last].im = 0.0;
        let mut out = c2r.make_output_vec();
        c2r.process(&mut spec, &mut out).expect("complex-to-real transform");
        out
    }
}
