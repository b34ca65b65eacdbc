use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, SpectralError};

/// Symmetry class of a component under `x3 -> -x3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity after one vertical derivative.
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }

    /// Parity of a pointwise product.
    pub fn times(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity shared by two summands.
    pub fn join(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::None
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
            Parity::None => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Parity> {
        match tag {
            0 => Some(Parity::Even),
            1 => Some(Parity::Odd),
            2 => Some(Parity::None),
            _ => None,
        }
    }
}

/// Parities of a velocity-like vector: horizontal components even, vertical odd.
pub const VELOCITY_PARITY: [Parity; 3] = [Parity::Even, Parity::Even, Parity::Odd];

/// Scalar or vector field in physical space.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    comps: Vec<Vec<f64>>,
    parity: Vec<Parity>,
}

/// Spectral coefficients of a field (half spectrum in `k3`).
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    comps: Vec<Vec<Complex64>>,
    parity: Vec<Parity>,
}

impl Field {
    pub fn new(grid: &Arc<Grid>, comps: Vec<Vec<f64>>, parity: Vec<Parity>) -> Field {
        assert!(!comps.is_empty() && comps.len() == parity.len());
        for c in &comps {
            assert_eq!(c.len(), grid.len(), "component length does not match grid");
        }
        Field { grid: Arc::clone(grid), comps, parity }
    }

    pub fn scalar(grid: &Arc<Grid>, data: Vec<f64>, parity: Parity) -> Field {
        Field::new(grid, vec![data], vec![parity])
    }

    pub fn zeros(grid: &Arc<Grid>, parity: &[Parity]) -> Field {
        Field::new(grid, vec![vec![0.0; grid.len()]; parity.len()], parity.to_vec())
    }

    /// Samples `f(x1, x2, x3)` on the grid.
    pub fn from_fn(grid: &Arc<Grid>, parity: Parity, f: impl Fn(f64, f64, f64) -> f64) -> Field {
        let mut data = vec![0.0; grid.len()];
        for ix in 0..grid.nh() {
            for iy in 0..grid.nh() {
                for iz in 0..grid.nv() {
                    data[grid.index(ix, iy, iz)] = f(grid.x(ix), grid.x(iy), grid.z(iz));
                }
            }
        }
        Field::scalar(grid, data, parity)
    }

    /// Stacks scalar fields into a vector field.
    pub fn stack(parts: &[&Field]) -> Field {
        let grid = Arc::clone(&parts[0].grid);
        let mut comps = Vec::new();
        let mut parity = Vec::new();
        for p in parts {
            assert!(*p.grid == *grid, "stacking fields from different grids");
            comps.extend(p.comps.iter().cloned());
            parity.extend(p.parity.iter().copied());
        }
        Field { grid, comps, parity }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn rank(&self) -> usize {
        self.comps.len()
    }
    pub fn comp(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }
    pub fn comp_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comps[i]
    }
    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }
    pub fn into_comps(self) -> Vec<Vec<f64>> {
        self.comps
    }
    pub fn parity(&self, i: usize) -> Parity {
        self.parity[i]
    }
    pub fn parities(&self) -> &[Parity] {
        &self.parity
    }
    pub fn set_parities(&mut self, parity: &[Parity]) {
        assert_eq!(parity.len(), self.comps.len());
        self.parity = parity.to_vec();
    }

    pub fn with_parities(mut self, parity: &[Parity]) -> Field {
        self.set_parities(parity);
        self
    }

    /// Single component as a scalar field.
    pub fn component(&self, i: usize) -> Field {
        Field::scalar(&self.grid, self.comps[i].clone(), self.parity[i])
    }

    /// First `count` components.
    pub fn leading(&self, count: usize) -> Field {
        Field::new(&self.grid, self.comps[..count].to_vec(), self.parity[..count].to_vec())
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: Arc::clone(&self.grid),
            comps: self.comps.iter().map(|c| self.grid.forward(c)).collect(),
            parity: self.parity.clone(),
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<(), SpectralError> {
        if *self.grid == *other.grid {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch)
        }
    }

    /// `int f . g dx` summed over components.
    pub fn inner(&self, other: &Field) -> f64 {
        assert_eq!(self.rank(), other.rank());
        let dv = self.grid.cell_volume();
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum::<f64>()
            * dv
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    /// `(int |f|^p dx)^{1/p}` by grid quadrature; `p = inf` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mag = self.magnitude();
        if p.is_infinite() {
            mag.iter().fold(0.0, |a: f64, &b| a.max(b))
        } else {
            (mag.iter().map(|v| v.powf(p)).sum::<f64>() * self.grid.cell_volume()).powf(1.0 / p)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |a: f64, &b| a.max(b.abs()))
    }

    /// `int f_i dx` per component.
    pub fn integrals(&self) -> Vec<f64> {
        let dv = self.grid.cell_volume();
        self.comps.iter().map(|c| c.iter().sum::<f64>() * dv).collect()
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.comps {
            for v in c.iter_mut() {
                *v *= a;
            }
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Field) {
        assert_eq!(self.rank(), other.rank());
        for (i, (c, o)) in self.comps.iter_mut().zip(&other.comps).enumerate() {
            for (x, y) in c.iter_mut().zip(o) {
                *x += a * y;
            }
            self.parity[i] = self.parity[i].join(other.parity[i]);
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Pointwise product of every component with a scalar field.
    pub fn times_scalar(&self, s: &Field) -> Field {
        assert_eq!(s.rank(), 1);
        let sp = s.parity[0];
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(&s.comps[0]).map(|(a, b)| a * b).collect())
            .collect();
        let parity = self.parity.iter().map(|p| p.times(sp)).collect();
        Field { grid: Arc::clone(&self.grid), comps, parity }
    }

    /// Applies `f` pointwise to every value, keeping parities.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        let comps = self.comps.iter().map(|c| c.iter().map(|&v| f(v)).collect()).collect();
        Field { grid: Arc::clone(&self.grid), comps, parity: self.parity.clone() }
    }

    /// Largest pointwise difference to another field of the same shape.
    pub fn max_diff(&self, other: &Field) -> f64 {
        assert_eq!(self.rank(), other.rank());
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

impl Spectrum {
    pub fn new(grid: &Arc<Grid>, comps: Vec<Vec<Complex64>>, parity: Vec<Parity>) -> Spectrum {
        assert!(!comps.is_empty() && comps.len() == parity.len());
        for c in &comps {
            assert_eq!(c.len(), grid.spec_len());
        }
        Spectrum { grid: Arc::clone(grid), comps, parity }
    }

    pub fn zeros(grid: &Arc<Grid>, parity: &[Parity]) -> Spectrum {
        Spectrum::new(
            grid,
            vec![vec![Complex64::new(0.0, 0.0); grid.spec_len()]; parity.len()],
            parity.to_vec(),
        )
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn rank(&self) -> usize {
        self.comps.len()
    }
    pub fn comp(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }
    pub fn comp_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.comps[i]
    }
    pub fn parity(&self, i: usize) -> Parity {
        self.parity[i]
    }
    pub fn parities(&self) -> &[Parity] {
        &self.parity
    }
    pub fn into_parts(self) -> (Vec<Vec<Complex64>>, Vec<Parity>) {
        (self.comps, self.parity)
    }

    pub fn to_field(&self) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            comps: self.comps.iter().map(|c| self.grid.inverse(c)).collect(),
            parity: self.parity.clone(),
        }
    }

    /// Multiplies every component by a real multiplier of the wavevector.
    pub fn apply_multiplier(&mut self, m: impl Fn(usize) -> f64) {
        for c in &mut self.comps {
            for (idx, v) in c.iter_mut().enumerate() {
                *v *= m(idx);
            }
        }
    }

    pub fn multiplied(&self, m: impl Fn(usize) -> f64) -> Spectrum {
        let mut out = self.clone();
        out.apply_multiplier(m);
        out
    }

    /// `int |f|^2 dx` by Parseval, optionally weighted per mode.
    pub fn weighted_norm_sq(&self, w: impl Fn(usize) -> f64) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for c in &self.comps {
            for (idx, v) in c.iter().enumerate() {
                total += g.spec_weight(idx) * w(idx) * v.norm_sqr();
            }
        }
        total * g.parseval_factor()
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_norm_sq(|_| 1.0).sqrt()
    }
}
