//! Logarithmic interpolation bound for `‖f‖_∞`.
//!
//! The field is split into blocks below `−N`, blocks in `[−N, N]` and blocks
//! above `N`, giving
//! `‖f‖_∞ ≤ C(2^{−dN/2}‖f‖₂ + (2N+1)‖f‖_{Ḃ⁰_{∞,∞}} + 2^{−(1−d/r)N}‖f‖_{W^{1,r}})`.

use serde::{Deserialize, Serialize};

use crate::besov::block_norms;
use crate::error::{LabError, Result};
use crate::littlewood_paley::DyadicPartition;
use crate::spectral::{forward_transform, gradient, lp_norm, RealField};

/// How the cut level `N` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutLevel {
    /// Smallest `N ≥ 0` with `2^{−(1−d/r)N}‖f‖_{W^{1,r}} ≤ 1`.
    Balanced,
    Fixed(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogInterpolationReport {
    pub r: f64,
    pub n_cut: u32,
    pub sup: f64,
    /// `2^{−dN/2}‖f‖₂`
    pub low: f64,
    /// `(2N+1)‖f‖_{Ḃ⁰_{∞,∞}}`
    pub middle: f64,
    /// `2^{−(1−d/r)N}‖f‖_{W^{1,r}}`
    pub high: f64,
    /// `sup / (low + middle + high)`, the smallest `C` with `sup ≤ C·bound`.
    pub fitted_c: f64,
}

impl LogInterpolationReport {
    pub fn bound(&self, c: f64) -> f64 {
        c * (self.low + self.middle + self.high)
    }

    pub fn dominates(&self, c: f64) -> bool {
        self.sup <= self.bound(c) * (1.0 + 1e-12)
    }
}

pub fn verify_log_interpolation(
    f: &RealField<f64>,
    r: f64,
    cut: CutLevel,
    partition: &DyadicPartition<f64>,
) -> Result<LogInterpolationReport> {
    if !(r > 3.0) || r.is_infinite() {
        return Err(LabError::InvalidExponent(format!("log interpolation needs finite r > 3, got {r}")));
    }
    if f.components() != 1 {
        return Err(LabError::ComponentMismatch { expected: 1, found: f.components() });
    }
    let d = f.grid().dim() as f64;
    let sup = f.max_abs();
    let l2 = lp_norm(f, 2.0)?;
    let b0 = block_norms(f, f64::INFINITY, partition)?.into_iter().fold(0.0_f64, |m, (_, v)| m.max(v));
    let grad = gradient(&forward_transform(f)?)?.to_real();
    let w1r = lp_norm(f, r)? + lp_norm(&grad, r)?;
    let decay = 1.0 - d / r;
    let n_cut = match cut {
        CutLevel::Fixed(n) => n,
        CutLevel::Balanced if w1r > 1.0 => (w1r.log2() / decay).ceil() as u32,
        CutLevel::Balanced => 0,
    };
    let n = n_cut as f64;
    let low = (-d * n / 2.0).exp2() * l2;
    let middle = (2.0 * n + 1.0) * b0;
    let high = (-decay * n).exp2() * w1r;
    let total = low + middle + high;
    let fitted_c = if total == 0.0 { 0.0 } else { sup / total };
    Ok(LogInterpolationReport { r, n_cut, sup, low, middle, high, fitted_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::{build_partition, phi};
    use crate::spectral::Grid;

    #[test]
    fn zero_field() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let part = build_partition(grid).unwrap();
        let rep = verify_log_interpolation(&RealField::zeros(grid, 1), 4.0, CutLevel::Balanced, &part).unwrap();
        assert_eq!((rep.sup, rep.bound(0.0), rep.fitted_c), (0.0, 0.0, 0.0));
        assert!(verify_log_interpolation(&RealField::zeros(grid, 1), 3.0, CutLevel::Balanced, &part).is_err());
    }

    #[test]
    fn single_mode_closed_form() {
        let grid = Grid::new(2, 64, 1.0).unwrap();
        let part = build_partition(grid).unwrap();
        let f = RealField::from_fn(grid, 1, |x, _| x[0].cos());
        let rep = verify_log_interpolation(&f, 4.0, CutLevel::Fixed(2), &part).unwrap();
        let tau = std::f64::consts::TAU;
        // ‖cos‖₂ = 2π/√2, ‖cos‖₄ = (3/8)^{1/4}·2π^{1/2}·…, ‖∇cos‖_r = ‖sin‖_r = ‖cos‖_r
        let l2 = tau / 2f64.sqrt();
        let l4 = (3.0 / 8.0 * tau * tau).powf(0.25);
        let b0 = phi(1.0).max(phi(2.0));
        assert!((rep.sup - 1.0).abs() < 1e-14);
        assert!((rep.low - l2 / 4.0).abs() < 1e-12);
        assert!((rep.middle - 5.0 * b0).abs() < 1e-12);
        assert!((rep.high - 2.0 * l4 * 0.5).abs() < 1e-12);
        assert!(rep.dominates(rep.fitted_c) && !rep.dominates(0.99 * rep.fitted_c));
    }

    #[test]
    fn fixed_cut_is_homogeneous() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let part = build_partition(grid).unwrap();
        let f = crate::random::RandomSpectrum::default().field::<f64>(grid, 1, 9).unwrap().without_mean();
        let a = verify_log_interpolation(&f, 4.0, CutLevel::Fixed(3), &part).unwrap();
        let b = verify_log_interpolation(&f.scale(7.5), 4.0, CutLevel::Fixed(3), &part).unwrap();
        assert!(a.fitted_c > 0.0 && (a.fitted_c - b.fitted_c).abs() <= 1e-10 * a.fitted_c);
        let bal = verify_log_interpolation(&f, 4.0, CutLevel::Balanced, &part).unwrap();
        assert!(bal.high <= 1.0 + 1e-12 && bal.dominates(bal.fitted_c));
    }
}
