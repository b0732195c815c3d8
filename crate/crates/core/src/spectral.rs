//! Periodic grids, sampled fields and their Fourier coefficients.
//!
//! The physical box is `[0, 2πL)^dim`, sampled at `n` points per axis in
//! row-major order (axis 0 slowest). Integer wavevectors `k` have components in
//! `[-n/2, n/2)` and physical frequency `ξ = k / L`.
//!
//! Fourier coefficients are stored with series normalization:
//! `f(x) = Σ_k f̂_k e^{i ξ·x}`, so `f̂_k = N⁻¹ Σ_x f(x) e^{-i ξ·x}`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Serialized description of a [`Grid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    #[serde(alias = "L", default = "default_box_scale")]
    pub box_scale: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_box_scale() -> f64 {
    1.0
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

/// Uniform periodic grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dim: usize,
    n: usize,
    box_scale: f64,
    dealias_fraction: f64,
}

impl TryFrom<GridSpec> for Grid {
    type Error = LabError;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::with_dealias(spec.dim, spec.n, spec.box_scale, spec.dealias_fraction)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec { dim: g.dim, n: g.n, box_scale: g.box_scale, dealias_fraction: g.dealias_fraction }
    }
}

impl Grid {
    /// Grid with the default 2/3 dealiasing rule.
    pub fn new(dim: usize, n: usize, box_scale: f64) -> Result<Self> {
        Self::with_dealias(dim, n, box_scale, default_dealias())
    }

    pub fn with_dealias(dim: usize, n: usize, box_scale: f64, dealias_fraction: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(LabError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if !(box_scale.is_finite() && box_scale > 0.0) {
            return Err(LabError::InvalidGrid(format!("box scale {box_scale} must be positive")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(LabError::InvalidGrid(format!(
                "dealias fraction {dealias_fraction} not in (0, 1]"
            )));
        }
        let grid = Grid { dim, n, box_scale, dealias_fraction };
        if grid.k_cut() < 2 {
            return Err(LabError::InvalidGrid(format!("dealias cutoff {} below 2", grid.k_cut())));
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_scale(&self) -> f64 {
        self.box_scale
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of samples per component.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained integer wavenumber per axis after dealiasing.
    pub fn k_cut(&self) -> i64 {
        (self.dealias_fraction * (self.n / 2) as f64 + 1e-12).floor() as i64
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.box_scale / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI * self.box_scale).powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Signed integer wavenumber stored at array index `i` along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis indices of a flat index; unused axes are zero.
    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    #[inline]
    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let mut flat = 0;
        for &i in idx.iter().take(self.dim) {
            flat = flat * self.n + i;
        }
        flat
    }

    /// Integer wavevector at a flat spectral index.
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        let idx = self.multi_index(flat);
        let mut k = [0i64; 3];
        for axis in 0..self.dim {
            k[axis] = self.wavenumber(idx[axis]);
        }
        k
    }

    /// Flat index holding integer wavevector `k` (components reduced mod n).
    pub fn index_of_wavevector(&self, k: [i64; 3]) -> usize {
        let mut idx = [0usize; 3];
        for axis in 0..self.dim {
            idx[axis] = k[axis].rem_euclid(self.n as i64) as usize;
        }
        self.flat_index(idx)
    }

    /// Physical frequency magnitude `|k| / L` at a flat spectral index.
    #[inline]
    pub fn frequency_norm(&self, flat: usize) -> f64 {
        let k = self.wavevector(flat);
        let sq: i64 = k.iter().map(|v| v * v).sum();
        (sq as f64).sqrt() / self.box_scale
    }

    /// True when every component of the wavevector is within the dealias cutoff.
    #[inline]
    pub fn is_retained(&self, flat: usize) -> bool {
        let kc = self.k_cut();
        self.wavevector(flat).iter().all(|k| k.abs() <= kc)
    }

    /// Physical coordinates of a sample.
    #[inline]
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = idx[axis] as f64 * h;
        }
        x
    }

    /// Frequency magnitudes of every spectral index, in storage order.
    pub fn frequency_table(&self) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| self.frequency_norm(i)).collect()
    }

    /// Largest frequency magnitude present on the grid.
    pub fn max_frequency(&self) -> f64 {
        (self.dim as f64).sqrt() * (self.n / 2) as f64 / self.box_scale
    }
}

/// Real samples of a scalar or vector field, component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField<T: Real> {
    grid: Grid,
    components: usize,
    values: Vec<T>,
}

impl<T: Real> RealField<T> {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        assert!(components >= 1, "fields carry at least one component");
        RealField { grid, components, values: vec![T::zero(); grid.len() * components] }
    }

    pub fn constant(grid: Grid, components: usize, value: T) -> Self {
        RealField { grid, components, values: vec![value; grid.len() * components] }
    }

    pub fn from_values(grid: Grid, components: usize, values: Vec<T>) -> Result<Self> {
        if components == 0 || values.len() != grid.len() * components {
            return Err(LabError::ComponentMismatch {
                expected: grid.len() * components.max(1),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite);
        }
        Ok(RealField { grid, components, values })
    }

    /// Samples `f(x, component)` at every grid point.
    pub fn from_fn(grid: Grid, components: usize, f: impl Fn(&[f64; 3], usize) -> f64 + Sync) -> Self {
        let n = grid.len();
        let values = (0..n * components)
            .into_par_iter()
            .map(|i| T::lit(f(&grid.position(i % n), i / n)))
            .collect();
        RealField { grid, components, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[T] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    /// One component as a scalar field.
    pub fn extract(&self, c: usize) -> RealField<T> {
        RealField { grid: self.grid, components: 1, values: self.component(c).to_vec() }
    }

    /// Concatenates scalar or vector fields into one multi-component field.
    pub fn stack(parts: &[RealField<T>]) -> Result<RealField<T>> {
        let grid = parts.first().ok_or(LabError::InvalidParameter("empty stack".into()))?.grid;
        let mut values = Vec::with_capacity(parts.iter().map(|p| p.values.len()).sum());
        let mut components = 0;
        for p in parts {
            if p.grid != grid {
                return Err(LabError::GridMismatch);
            }
            values.extend_from_slice(&p.values);
            components += p.components;
        }
        Ok(RealField { grid, components, values })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self, c: usize) -> T {
        let comp = self.component(c);
        comp.iter().copied().sum::<T>() / T::lit(comp.len() as f64)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Largest absolute sample over all components.
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Pointwise Euclidean magnitude across components.
    pub fn magnitude(&self) -> RealField<T> {
        let n = self.grid.len();
        let values = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..self.components)
                    .map(|c| {
                        let v = self.values[c * n + i];
                        v * v
                    })
                    .sum::<T>()
                    .sqrt()
            })
            .collect();
        RealField { grid: self.grid, components: 1, values }
    }

    pub fn map(&self, f: impl Fn(T) -> T + Sync) -> RealField<T> {
        RealField {
            grid: self.grid,
            components: self.components,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: T) -> RealField<T> {
        self.map(|v| v * a)
    }

    pub fn add_scalar(&self, a: T) -> RealField<T> {
        self.map(|v| v + a)
    }

    fn check_same(&self, other: &RealField<T>) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        if self.components != other.components {
            return Err(LabError::ComponentMismatch { expected: self.components, found: other.components });
        }
        Ok(())
    }

    pub fn add(&self, other: &RealField<T>) -> Result<RealField<T>> {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &RealField<T>) -> Result<RealField<T>> {
        self.axpy(-T::one(), other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: T, other: &RealField<T>) -> Result<RealField<T>> {
        self.check_same(other)?;
        let values = self.values.par_iter().zip(&other.values).map(|(&x, &y)| x + a * y).collect();
        Ok(RealField { grid: self.grid, components: self.components, values })
    }

    /// Pointwise product. One operand may be scalar, in which case it
    /// multiplies every component of the other.
    pub fn mul(&self, other: &RealField<T>) -> Result<RealField<T>> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        let n = self.grid.len();
        let (scalar, vector) = match (self.components, other.components) {
            (a, b) if a == b => {
                let values = self.values.par_iter().zip(&other.values).map(|(&x, &y)| x * y).collect();
                return Ok(RealField { grid: self.grid, components: self.components, values });
            }
            (1, _) => (self, other),
            (_, 1) => (other, self),
            (a, b) => return Err(LabError::ComponentMismatch { expected: a, found: b }),
        };
        let values = (0..n * vector.components)
            .into_par_iter()
            .map(|i| scalar.values[i % n] * vector.values[i])
            .collect();
        Ok(RealField { grid: self.grid, components: vector.components, values })
    }

    /// Pointwise Euclidean dot product of two fields with equal component count.
    pub fn dot(&self, other: &RealField<T>) -> Result<RealField<T>> {
        self.check_same(other)?;
        let n = self.grid.len();
        let values = (0..n)
            .into_par_iter()
            .map(|i| (0..self.components).map(|c| self.values[c * n + i] * other.values[c * n + i]).sum())
            .collect();
        Ok(RealField { grid: self.grid, components: 1, values })
    }

    /// Mean-free copy (each component shifted by its mean).
    pub fn without_mean(&self) -> RealField<T> {
        let n = self.grid.len();
        let means: Vec<T> = (0..self.components).map(|c| self.mean(c)).collect();
        let values = self.values.iter().enumerate().map(|(i, &v)| v - means[i / n]).collect();
        RealField { grid: self.grid, components: self.components, values }
    }

    /// Circular shift by an integer number of cells per axis.
    pub fn roll(&self, shift: [i64; 3]) -> RealField<T> {
        let n = self.grid.len();
        let mut out = vec![T::zero(); self.values.len()];
        for i in 0..n {
            let mut idx = self.grid.multi_index(i);
            for axis in 0..self.grid.dim() {
                idx[axis] = (idx[axis] as i64 + shift[axis]).rem_euclid(self.grid.n() as i64) as usize;
            }
            let j = self.grid.flat_index(idx);
            for c in 0..self.components {
                out[c * n + j] = self.values[c * n + i];
            }
        }
        RealField { grid: self.grid, components: self.components, values: out }
    }

    pub fn forward(&self) -> Result<SpectralField<T>> {
        forward_transform(self)
    }

    pub fn cast<U: Real>(&self) -> RealField<U> {
        RealField {
            grid: self.grid,
            components: self.components,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Fourier coefficients of a real field, indexed like the samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T: Real> {
    grid: Grid,
    components: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        SpectralField { grid, components, coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len() * components] }
    }

    pub fn from_coeffs(grid: Grid, components: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if components == 0 || coeffs.len() != grid.len() * components {
            return Err(LabError::ComponentMismatch { expected: grid.len() * components.max(1), found: coeffs.len() });
        }
        Ok(SpectralField { grid, components, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex<T>] {
        let n = self.grid.len();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        let n = self.grid.len();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    pub fn extract(&self, c: usize) -> SpectralField<T> {
        SpectralField { grid: self.grid, components: 1, coeffs: self.component(c).to_vec() }
    }

    pub fn stack(parts: &[SpectralField<T>]) -> Result<SpectralField<T>> {
        let grid = parts.first().ok_or(LabError::InvalidParameter("empty stack".into()))?.grid;
        let mut coeffs = Vec::new();
        let mut components = 0;
        for p in parts {
            if p.grid != grid {
                return Err(LabError::GridMismatch);
            }
            coeffs.extend_from_slice(&p.coeffs);
            components += p.components;
        }
        Ok(SpectralField { grid, components, coeffs })
    }

    /// Coefficient of integer wavevector `k` in component `c`.
    pub fn mode(&self, c: usize, k: [i64; 3]) -> Complex<T> {
        self.component(c)[self.grid.index_of_wavevector(k)]
    }

    pub fn set_mode(&mut self, c: usize, k: [i64; 3], value: Complex<T>) {
        let idx = self.grid.index_of_wavevector(k);
        self.component_mut(c)[idx] = value;
    }

    /// Trigonometric interpolant of component `c` at an arbitrary point.
    pub fn evaluate(&self, c: usize, x: &[f64; 3]) -> f64 {
        let grid = self.grid;
        let (n, dim) = (grid.n(), grid.dim());
        let phases: Vec<Vec<Complex<f64>>> = (0..dim)
            .map(|a| (0..n).map(|i| Complex::from_polar(1.0, grid.wavenumber(i) as f64 * x[a] / grid.box_scale())).collect())
            .collect();
        let acc = ordered_sum(grid.len(), |flat| {
            let idx = grid.multi_index(flat);
            let z = self.component(c)[flat];
            let mut e = Complex::new(z.re.as_f64(), z.im.as_f64());
            for (a, ph) in phases.iter().enumerate() {
                e *= ph[idx[a]];
            }
            e.re
        });
        acc
    }

    /// Mean (zero mode) of component `c`.
    pub fn mean(&self, c: usize) -> T {
        self.component(c)[0].re
    }

    /// Multiplies every coefficient by `m(flat_index)`, shared across components.
    pub fn apply_multiplier(&self, m: impl Fn(usize) -> T + Sync) -> SpectralField<T> {
        let n = self.grid.len();
        let coeffs = self.coeffs.par_iter().enumerate().map(|(i, &z)| z * m(i % n)).collect();
        SpectralField { grid: self.grid, components: self.components, coeffs }
    }

    /// Multiplies by a precomputed table of real weights, one per spectral index.
    pub fn apply_weights(&self, weights: &[T]) -> SpectralField<T> {
        let n = self.grid.len();
        debug_assert_eq!(weights.len(), n);
        let coeffs = self.coeffs.par_iter().enumerate().map(|(i, &z)| z * weights[i % n]).collect();
        SpectralField { grid: self.grid, components: self.components, coeffs }
    }

    pub fn scale(&self, a: T) -> SpectralField<T> {
        SpectralField {
            grid: self.grid,
            components: self.components,
            coeffs: self.coeffs.par_iter().map(|&z| z * a).collect(),
        }
    }

    pub fn axpy(&self, a: T, other: &SpectralField<T>) -> Result<SpectralField<T>> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        if self.components != other.components {
            return Err(LabError::ComponentMismatch { expected: self.components, found: other.components });
        }
        let coeffs = self.coeffs.par_iter().zip(&other.coeffs).map(|(&x, &y)| x + y * a).collect();
        Ok(SpectralField { grid: self.grid, components: self.components, coeffs })
    }

    pub fn add(&self, other: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.axpy(-T::one(), other)
    }

    /// Copy with the zero mode of every component removed.
    pub fn without_mean(&self) -> SpectralField<T> {
        let mut out = self.clone();
        let n = self.grid.len();
        for c in 0..self.components {
            out.coeffs[c * n] = Complex::new(T::zero(), T::zero());
        }
        out
    }

    /// Coefficient-side `L²` norm via Parseval: `(vol · Σ|f̂|²)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        let sum = ordered_sum(self.coeffs.len(), |i| self.coeffs[i].norm_sqr());
        (sum * T::lit(self.grid.volume())).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest `|f̂(k) - conj f̂(-k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> T {
        let n = self.grid.len();
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let worst = (0..n * self.components)
            .into_par_iter()
            .map(|i| {
                let c = i / n;
                let k = self.grid.wavevector(i % n);
                let j = self.grid.index_of_wavevector([-k[0], -k[1], -k[2]]);
                (self.coeffs[i] - self.coeffs[c * n + j].conj()).norm()
            })
            .reduce(|| T::zero(), T::max);
        worst / scale
    }

    /// Inverse transform without the symmetry check; imaginary parts dropped.
    pub(crate) fn to_real(&self) -> RealField<T> {
        let mut data = self.coeffs.clone();
        fft_nd(&mut data, &self.grid, self.components, true);
        RealField {
            grid: self.grid,
            components: self.components,
            values: data.into_par_iter().map(|z| z.re).collect(),
        }
    }

    pub fn inverse(&self) -> Result<RealField<T>> {
        inverse_transform(self)
    }
}

/// In-place multidimensional FFT over every component. The forward direction
/// applies the `1/N` series normalization.
fn fft_nd<T: Real>(data: &mut [Complex<T>], grid: &Grid, components: usize, inverse: bool) {
    let n = grid.n();
    let total = grid.len();
    let plans = T::fft_plans(n);
    let plan = if inverse { plans.inverse } else { plans.forward };
    for c in 0..components {
        let field = &mut data[c * total..(c + 1) * total];
        for axis in 0..grid.dim() {
            let inner = n.pow((grid.dim() - 1 - axis) as u32);
            if inner == 1 {
                field.par_chunks_mut(n * 64).for_each(|chunk| plan.process(chunk));
                continue;
            }
            // Gather lines along `axis` into contiguous storage.
            let mut lines = vec![Complex::new(T::zero(), T::zero()); total];
            lines.par_chunks_mut(n).enumerate().for_each(|(line, buf)| {
                let outer = line / inner;
                let i = line % inner;
                let base = outer * n * inner + i;
                for (m, slot) in buf.iter_mut().enumerate() {
                    *slot = field[base + m * inner];
                }
            });
            lines.par_chunks_mut(n * 64).for_each(|chunk| plan.process(chunk));
            field.par_chunks_mut(inner).enumerate().for_each(|(row, out)| {
                let outer = row / n;
                let m = row % n;
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = lines[(outer * inner + i) * n + m];
                }
            });
        }
    }
    if !inverse {
        let scale = T::one() / T::lit(total as f64);
        data.par_iter_mut().for_each(|z| *z = *z * scale);
    }
}

/// Sum of `term(0..n)` in fixed chunks, so the result does not depend on scheduling.
pub(crate) fn ordered_sum<T: Real>(n: usize, term: impl Fn(usize) -> T + Sync) -> T {
    const CHUNK: usize = 4096;
    let partial: Vec<T> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).fold(T::zero(), |a, i| a + term(i)))
        .collect();
    partial.into_iter().fold(T::zero(), |a, b| a + b)
}

/// Forward transform of a real field. Fails on non-finite samples.
pub fn forward_transform<T: Real>(f: &RealField<T>) -> Result<SpectralField<T>> {
    if !f.is_finite() {
        return Err(LabError::NonFinite);
    }
    let mut data: Vec<Complex<T>> = f.values.par_iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_nd(&mut data, &f.grid, f.components, false);
    Ok(SpectralField { grid: f.grid, components: f.components, coeffs: data })
}

/// Inverse transform. Fails when the spectrum is not Hermitian to 1e-10 relative.
pub fn inverse_transform<T: Real>(spec: &SpectralField<T>) -> Result<RealField<T>> {
    let defect = spec.hermitian_defect();
    if defect > T::lit(1e-10) {
        return Err(LabError::NotHermitian(defect.as_f64()));
    }
    Ok(spec.to_real())
}

/// Multiplies each coefficient by `(i ξ_axis)^order`, zeroing the Nyquist
/// line along `axis` for odd orders.
pub fn spectral_derivative<T: Real>(spec: &SpectralField<T>, axis: usize, order: u32) -> Result<SpectralField<T>> {
    let grid = *spec.grid();
    if axis >= grid.dim() {
        return Err(LabError::AxisOutOfRange { axis, dim: grid.dim() });
    }
    if order == 0 {
        return Ok(spec.clone());
    }
    let n = grid.len();
    let half = (grid.n() / 2) as i64;
    let coeffs = spec
        .coeffs
        .par_iter()
        .enumerate()
        .map(|(i, &z)| {
            let k = grid.wavevector(i % n)[axis];
            if order % 2 == 1 && k == -half {
                return Complex::new(T::zero(), T::zero());
            }
            let xi = T::lit(k as f64 / grid.box_scale());
            // (i ξ)^order = ξ^order · i^order
            let mag = xi.powi(order as i32);
            let rot = match order % 4 {
                0 => Complex::new(mag, T::zero()),
                1 => Complex::new(T::zero(), mag),
                2 => Complex::new(-mag, T::zero()),
                _ => Complex::new(T::zero(), -mag),
            };
            z * rot
        })
        .collect();
    Ok(SpectralField { grid, components: spec.components, coeffs })
}

/// Zeroes every coefficient with some `|k_axis| > K_cut`. Idempotent.
pub fn dealias<T: Real>(spec: &SpectralField<T>) -> SpectralField<T> {
    let grid = *spec.grid();
    let n = grid.len();
    let coeffs = spec
        .coeffs
        .par_iter()
        .enumerate()
        .map(|(i, &z)| if grid.is_retained(i % n) { z } else { Complex::new(T::zero(), T::zero()) })
        .collect();
    SpectralField { grid, components: spec.components, coeffs }
}

/// Projects a real field onto its dealiased spectrum.
pub fn dealias_field<T: Real>(f: &RealField<T>) -> Result<RealField<T>> {
    Ok(dealias(&forward_transform(f)?).to_real())
}

/// Rectangle-rule `L^p` norm of the pointwise Euclidean magnitude;
/// `p = ∞` takes the grid maximum.
pub fn lp_norm<T: Real>(f: &RealField<T>, p: T) -> Result<T> {
    if p.is_nan() || p < T::one() {
        return Err(LabError::InvalidExponent(format!("p = {p} below 1")));
    }
    let n = f.grid.len();
    let comps = f.components;
    let mag = |i: usize| -> T {
        if comps == 1 {
            f.values[i].abs()
        } else {
            (0..comps).map(|c| f.values[c * n + i] * f.values[c * n + i]).sum::<T>().sqrt()
        }
    };
    if p.is_infinite() {
        return Ok((0..n).into_par_iter().map(mag).reduce(|| T::zero(), T::max));
    }
    let cell = T::lit(f.grid.cell_volume());
    if p == T::lit(2.0) {
        let s = ordered_sum(n, |i| {
            let m = mag(i);
            m * m
        });
        return Ok((s * cell).sqrt());
    }
    // Scale by the maximum to keep large exponents in range.
    let top = (0..n).into_par_iter().map(mag).reduce(|| T::zero(), T::max);
    if top == T::zero() {
        return Ok(T::zero());
    }
    let s = ordered_sum(n, |i| (mag(i) / top).powf(p));
    Ok(top * (s * cell).powf(T::one() / p))
}

/// Homogeneous Sobolev norm `(vol Σ_{ξ≠0} |ξ|^{2s} |f̂(ξ)|²)^{1/2}`; the mean is always excluded.
pub fn sobolev_multiplier_norm<T: Real>(f: &RealField<T>, s: T) -> Result<T> {
    let spec = forward_transform(f)?;
    Ok(spectral_sobolev_norm(&spec, s))
}

pub fn spectral_sobolev_norm<T: Real>(spec: &SpectralField<T>, s: T) -> T {
    let grid = *spec.grid();
    let n = grid.len();
    let sum = ordered_sum(spec.coeffs.len(), |i| {
        let idx = i % n;
        if idx == 0 {
            return T::zero();
        }
        let xi = T::lit(grid.frequency_norm(idx));
        xi.powf(s + s) * spec.coeffs[i].norm_sqr()
    });
    (sum * T::lit(grid.volume())).sqrt()
}

/// Inhomogeneous multiplier norm `(vol Σ (1+|ξ|²)^s |f̂(ξ)|²)^{1/2}`, mean included.
pub fn inhomogeneous_sobolev_norm<T: Real>(f: &RealField<T>, s: T) -> Result<T> {
    let spec = forward_transform(f)?;
    let grid = *spec.grid();
    let n = grid.len();
    let sum = ordered_sum(spec.coeffs.len(), |i| {
        let xi = grid.frequency_norm(i % n);
        T::lit(1.0 + xi * xi).powf(s) * spec.coeffs[i].norm_sqr()
    });
    Ok((sum * T::lit(grid.volume())).sqrt())
}

/// Spectral gradient of a scalar spectrum: `dim` components.
pub fn gradient<T: Real>(spec: &SpectralField<T>) -> Result<SpectralField<T>> {
    check_components(spec, 1)?;
    let parts: Result<Vec<_>> = (0..spec.grid().dim()).map(|a| spectral_derivative(spec, a, 1)).collect();
    SpectralField::stack(&parts?)
}

/// Spectral divergence of a `dim`-component spectrum.
pub fn divergence<T: Real>(spec: &SpectralField<T>) -> Result<SpectralField<T>> {
    let dim = spec.grid().dim();
    check_components(spec, dim)?;
    let mut acc = SpectralField::zeros(*spec.grid(), 1);
    for a in 0..dim {
        acc = acc.add(&spectral_derivative(&spec.extract(a), a, 1)?)?;
    }
    Ok(acc)
}

/// Spectral curl: three components in 3D, the scalar `∂₁u₂ − ∂₂u₁` in 2D,
/// and an identically zero scalar in 1D.
pub fn curl<T: Real>(spec: &SpectralField<T>) -> Result<SpectralField<T>> {
    let dim = spec.grid().dim();
    check_components(spec, dim)?;
    let d = |c: usize, a: usize| spectral_derivative(&spec.extract(c), a, 1);
    match dim {
        1 => Ok(SpectralField::zeros(*spec.grid(), 1)),
        2 => d(1, 0)?.sub(&d(0, 1)?),
        _ => SpectralField::stack(&[d(2, 1)?.sub(&d(1, 2)?)?, d(0, 2)?.sub(&d(2, 0)?)?, d(1, 0)?.sub(&d(0, 1)?)?]),
    }
}

/// Componentwise spectral Laplacian.
pub fn laplacian<T: Real>(spec: &SpectralField<T>) -> SpectralField<T> {
    let grid = *spec.grid();
    spec.apply_multiplier(|i| {
        let xi = grid.frequency_norm(i);
        T::lit(-xi * xi)
    })
}

/// Gradient of every component: `components · dim` entries, component-major
/// (`∂_a u_c` at index `c · dim + a`).
pub fn jacobian<T: Real>(spec: &SpectralField<T>) -> Result<SpectralField<T>> {
    let dim = spec.grid().dim();
    let mut parts = Vec::with_capacity(spec.components() * dim);
    for c in 0..spec.components() {
        let comp = spec.extract(c);
        for a in 0..dim {
            parts.push(spectral_derivative(&comp, a, 1)?);
        }
    }
    SpectralField::stack(&parts)
}

fn check_components<T: Real>(spec: &SpectralField<T>, expected: usize) -> Result<()> {
    if spec.components() != expected {
        return Err(LabError::ComponentMismatch { expected, found: spec.components() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RandomSpectrum;

    fn cos4(grid: Grid) -> RealField<f64> {
        RealField::<f64>::from_fn(grid, 1, |x, _| (4.0 * x[0]).cos())
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 64, 1.0).is_ok());
        assert!(Grid::new(4, 64, 1.0).is_err());
        assert!(Grid::new(2, 48, 1.0).is_err());
        assert!(Grid::new(2, 4, 1.0).is_err());
        assert!(Grid::new(2, 16, -1.0).is_err());
        assert_eq!(Grid::new(1, 64, 1.0).unwrap().k_cut(), 21);
        assert_eq!(Grid::new(1, 8, 1.0).unwrap().k_cut(), 2);
    }

    #[test]
    fn constant_has_only_mean_mode() {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let spec = forward_transform(&RealField::<f64>::constant(grid, 1, 1.0)).unwrap();
        assert!((spec.coeffs()[0].re - 1.0).abs() < 1e-14);
        assert!(spec.coeffs()[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn single_cosine_mode() {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let spec = forward_transform(&cos4(grid)).unwrap();
        for (i, z) in spec.coeffs().iter().enumerate() {
            let k = grid.wavevector(i);
            if k == [4, 0, 0] || k == [-4, 0, 0] {
                assert!((z.re - 0.5).abs() < 1e-14);
            } else {
                assert!(z.norm() < 1e-14, "mode {k:?} = {z}");
            }
        }
    }

    #[test]
    fn random_round_trip() {
        for (dim, n) in [(1, 64), (2, 32), (3, 16)] {
            let grid = Grid::new(dim, n, 1.3).unwrap();
            let f = RealField::<f64>::from_fn(grid, 2, |x, c| ((x[0] * 3.0 + c as f64).sin() * x[0]).exp());
            let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
            let err = back.sub(&f).unwrap().max_abs();
            assert!(err <= 1e-12 * f.max_abs(), "dim {dim}: {err}");
        }
    }

    #[test]
    fn inverse_rejects_non_hermitian() {
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let mut spec = SpectralField::<f64>::zeros(grid, 1);
        spec.set_mode(0, [3, 0, 0], Complex::new(1.0, 0.0));
        assert!(matches!(inverse_transform(&spec), Err(LabError::NotHermitian(_))));
    }

    #[test]
    fn forward_rejects_nan() {
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let mut f = RealField::<f64>::zeros(grid, 1);
        f.values_mut()[3] = f64::NAN;
        assert!(matches!(forward_transform(&f), Err(LabError::NonFinite)));
    }

    #[test]
    fn derivative_of_cosine() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let d = spectral_derivative(&forward_transform(&cos4(grid)).unwrap(), 0, 1).unwrap();
        let got = inverse_transform(&d).unwrap();
        let want = RealField::<f64>::from_fn(grid, 1, |x, _| -4.0 * (4.0 * x[0]).sin());
        assert!(got.sub(&want).unwrap().max_abs() < 1e-12);
        assert!(spectral_derivative(&d, 2, 1).is_err());
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let grid = Grid::new(3, 16, 2.0).unwrap();
        let lap = laplacian(&forward_transform(&RealField::<f64>::constant(grid, 1, 3.5)).unwrap());
        assert!(lap.max_abs() < 1e-14);
    }

    #[test]
    fn div_curl_vanishes() {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let u = RandomSpectrum::default().field::<f64>(grid, 3, 17).unwrap();
        let dc = divergence(&curl(&forward_transform(&u).unwrap()).unwrap()).unwrap();
        assert!(dc.to_real().max_abs() <= 1e-11);
    }

    #[test]
    fn dealias_bookkeeping() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let f = RealField::<f64>::from_fn(grid, 1, |x, _| (x[0].sin() + 0.3 * (2.0 * x[1]).cos()).exp());
        let spec = forward_transform(&f).unwrap();
        let kept = dealias(&spec);
        assert_eq!(dealias(&kept), kept);
        let lost = spec.sub(&kept).unwrap();
        let total = spec.l2_norm().powi(2);
        let split = kept.l2_norm().powi(2) + lost.l2_norm().powi(2);
        assert!((total - split).abs() <= 1e-12 * total);
        let zero = SpectralField::<f64>::zeros(grid, 1);
        assert_eq!(dealias(&zero), zero);
        // already band-limited input is unchanged
        let band = forward_transform(&cos4(grid)).unwrap();
        assert!(dealias(&band).sub(&band).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn lp_norm_values() {
        let grid = Grid::new(2, 32, 1.5).unwrap();
        let one = RealField::<f64>::constant(grid, 1, 1.0);
        assert!((lp_norm(&one, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        let c = RealField::<f64>::from_fn(grid, 1, |x, _| (4.0 * x[0] / 1.5).cos());
        let two_pi = 2.0 * std::f64::consts::PI;
        let want = two_pi.powf(1.0) / 2f64.sqrt() * 1.5;
        assert!((lp_norm(&c, 2.0).unwrap() - want).abs() < 1e-12 * want);
        assert_eq!(lp_norm(&RealField::zeros(grid, 1), 3.0).unwrap(), 0.0);
        assert!(lp_norm(&one, 0.5).is_err());
    }

    #[test]
    fn sobolev_single_mode() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let f = cos4(grid);
        let l2 = lp_norm(&f, 2.0).unwrap();
        let delta = 0.3;
        assert!((sobolev_multiplier_norm(&f, -delta).unwrap() - 4f64.powf(-delta) * l2).abs() < 1e-12);
        assert!((sobolev_multiplier_norm(&f, 1.0).unwrap() - 4.0 * l2).abs() < 1e-11);
        let g = f.add_scalar(2.0);
        assert!((sobolev_multiplier_norm(&g, 0.0).unwrap() - l2).abs() < 1e-12);
    }

    #[test]
    fn parseval() {
        let grid = Grid::new(3, 16, 0.7).unwrap();
        let f = RandomSpectrum::default().field::<f64>(grid, 1, 5).unwrap().add_scalar(0.4);
        let phys = lp_norm(&f, 2.0).unwrap();
        let spec = forward_transform(&f).unwrap().l2_norm();
        assert!((phys - spec).abs() <= 1e-10 * phys);
    }

    #[test]
    fn derivative_commutes_with_dealias() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let f = RandomSpectrum::default().field::<f64>(grid, 1, 9).unwrap();
        let spec = forward_transform(&f).unwrap();
        let a = dealias(&spectral_derivative(&spec, 1, 1).unwrap());
        let b = spectral_derivative(&dealias(&spec), 1, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn f32_fields_transform() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let f: RealField<f32> = RealField::from_fn(grid, 1, |x, _| (3.0 * x[1]).sin());
        let back = forward_transform(&f).unwrap().inverse().unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-5);
    }
}
