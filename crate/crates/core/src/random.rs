//! Seeded random smooth fields.
//!
//! Coefficients are drawn over the integer box `[-K, K]^dim` in a fixed
//! order, so the same seed and cutoff give the same function on every grid
//! that resolves `K`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::spectral::{Grid, RealField, SpectralField};

/// Recipe for random fields with `|f̂(ξ)| ∝ (1+|ξ|)^{-a}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpectrum {
    /// Decay exponent range; one exponent is drawn per component.
    pub decay: (f64, f64),
    /// Largest integer wavenumber per axis; `None` uses the grid's dealias cutoff.
    pub cutoff: Option<i64>,
    pub amplitude: f64,
}

impl Default for RandomSpectrum {
    fn default() -> Self {
        RandomSpectrum { decay: (2.0, 4.0), cutoff: None, amplitude: 1.0 }
    }
}

impl RandomSpectrum {
    pub fn with_cutoff(mut self, k: i64) -> Self {
        self.cutoff = Some(k);
        self
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }

    pub fn with_decay(mut self, lo: f64, hi: f64) -> Self {
        self.decay = (lo, hi);
        self
    }

    /// Mean-zero Hermitian spectrum.
    pub fn spectrum<T: Real>(&self, grid: Grid, components: usize, seed: u64) -> Result<SpectralField<T>> {
        let kmax = self.cutoff.unwrap_or_else(|| grid.k_cut());
        if kmax < 1 || kmax > grid.k_cut() {
            return Err(LabError::InvalidParameter(format!(
                "random cutoff {kmax} outside 1..={}",
                grid.k_cut()
            )));
        }
        if !(self.decay.0 <= self.decay.1) {
            return Err(LabError::InvalidParameter("decay range reversed".into()));
        }
        let dim = grid.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = SpectralField::zeros(grid, components);
        let side = (2 * kmax + 1) as usize;
        let count = side.pow(dim as u32);
        for c in 0..components {
            let a = if self.decay.0 == self.decay.1 { self.decay.0 } else { rng.gen_range(self.decay.0..self.decay.1) };
            for m in 0..count {
                let mut k = [0i64; 3];
                let mut rest = m;
                for axis in (0..dim).rev() {
                    k[axis] = (rest % side) as i64 - kmax;
                    rest /= side;
                }
                let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let spread: f64 = rng.gen_range(0.5..1.5);
                // Only the lexicographically positive half is kept; its mirror is the conjugate.
                let positive = k.iter().find(|&&v| v != 0).map(|&v| v > 0).unwrap_or(false);
                if !positive {
                    continue;
                }
                let xi = (k.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt() / grid.box_scale();
                let mag = self.amplitude * spread * (1.0 + xi).powf(-a);
                let z = Complex::new(T::lit(mag * phase.cos()), T::lit(mag * phase.sin()));
                out.set_mode(c, k, z);
                out.set_mode(c, [-k[0], -k[1], -k[2]], z.conj());
            }
        }
        Ok(out)
    }

    pub fn field<T: Real>(&self, grid: Grid, components: usize, seed: u64) -> Result<RealField<T>> {
        Ok(self.spectrum(grid, components, seed)?.to_real())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_and_mean_zero() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let s: SpectralField<f64> = RandomSpectrum::default().spectrum(grid, 2, 3).unwrap();
        assert!(s.hermitian_defect() < 1e-15);
        assert_eq!(s.mean(0), 0.0);
        assert_eq!(s.mean(1), 0.0);
    }

    #[test]
    fn resolution_independent() {
        let r = RandomSpectrum::default().with_cutoff(8);
        let a: RealField<f64> = r.field(Grid::new(2, 32, 1.0).unwrap(), 1, 11).unwrap();
        let b: RealField<f64> = r.field(Grid::new(2, 64, 1.0).unwrap(), 1, 11).unwrap();
        // every other sample of the fine grid coincides with the coarse grid
        for i in 0..32 {
            for j in 0..32 {
                let x = a.values()[i * 32 + j];
                let y = b.values()[(2 * i) * 64 + 2 * j];
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seeds_differ() {
        let grid = Grid::new(1, 64, 1.0).unwrap();
        let a: RealField<f64> = RandomSpectrum::default().field(grid, 1, 1).unwrap();
        let b: RealField<f64> = RandomSpectrum::default().field(grid, 1, 2).unwrap();
        assert_ne!(a, b);
    }
}
