//! Radial dyadic partition of unity and the block operators `Δ_j`, `S_j`.
//!
//! The profile is `φ(r) = θ(r) / Σ_j θ(2^{-j} r)` with `θ` a smooth bump
//! supported in `[3/4, 8/3]`. At most two dilates of `θ` overlap any radius,
//! so the normalizing sum is evaluated exactly instead of being tabulated.
//!
//! On a grid only the blocks `j_min..=j_max` are kept. The top block also
//! carries every dilate above it and the bottom block is one minus the rest,
//! so the discrete blocks sum to one on every nonzero frequency.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::random::RandomSpectrum;
use crate::scalar::Real;
use crate::spectral::{dealias, forward_transform, jacobian, lp_norm, Grid, RealField, SpectralField};

pub const SUPPORT_LO: f64 = 0.75;
pub const SUPPORT_HI: f64 = 8.0 / 3.0;

/// Unnormalized bump `exp(-1/(1-t²))` in the log-radius variable `t ∈ (-1, 1)`.
pub fn theta(r: f64) -> f64 {
    if !(r > SUPPORT_LO && r < SUPPORT_HI) {
        return 0.0;
    }
    let (a, b) = (SUPPORT_LO.ln(), SUPPORT_HI.ln());
    let t = (2.0 * r.ln() - a - b) / (b - a);
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Dyadic indices `j` with `2^{-j} r` inside the open support.
fn active_dilates(r: f64) -> std::ops::RangeInclusive<i32> {
    let lo = (r / SUPPORT_HI).log2().floor() as i32;
    let hi = (r / SUPPORT_LO).log2().ceil() as i32;
    lo..=hi
}

/// Normalized profile `φ`; `Σ_j φ(2^{-j} r) = 1` for every `r > 0`.
pub fn phi(r: f64) -> f64 {
    let top = theta(r);
    if top == 0.0 {
        return 0.0;
    }
    let denom: f64 = active_dilates(r).map(|j| theta(r * (-j as f64).exp2())).sum();
    top / denom
}

/// `φ(2^{-j} r)`.
#[inline]
pub fn phi_j(j: i32, r: f64) -> f64 {
    phi(r * (-j as f64).exp2())
}

/// Dyadic partition resolved on one grid.
#[derive(Clone, Debug)]
pub struct DyadicPartition<T: Real> {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    weights: Vec<Vec<T>>,
}

/// Block range and multiplier for the blocks of one grid, before sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRange {
    pub j_min: i32,
    pub j_max: i32,
}

impl BlockRange {
    /// Shells meeting `|ξ| ≥ 1/L` at the bottom and the dealiased band at the top.
    pub fn for_grid(grid: &Grid) -> Result<Self> {
        let lowest = 1.0 / grid.box_scale();
        let top = grid.k_cut() as f64 / grid.box_scale();
        let mut j_min = (lowest / SUPPORT_HI).log2().floor() as i32 - 1;
        while SUPPORT_HI * (j_min as f64).exp2() <= lowest {
            j_min += 1;
        }
        let mut j_max = (top / SUPPORT_LO).log2().ceil() as i32 + 1;
        while SUPPORT_LO * (j_max as f64).exp2() > top {
            j_max -= 1;
        }
        if j_max - j_min + 1 < 3 {
            return Err(LabError::TooCoarse(format!("only blocks {j_min}..={j_max} resolved")));
        }
        Ok(BlockRange { j_min, j_max })
    }

    /// Weight of block `j` at radius `r > 0`, with edge absorption.
    pub fn weight(&self, j: i32, r: f64) -> f64 {
        if r <= 0.0 || j < self.j_min || j > self.j_max {
            return 0.0;
        }
        if j == self.j_max {
            return active_dilates(r).filter(|&k| k >= self.j_max).map(|k| phi_j(k, r)).sum();
        }
        if j == self.j_min {
            if r >= SUPPORT_HI * (self.j_min as f64).exp2() {
                return 0.0;
            }
            let rest: f64 = (self.j_min + 1..=self.j_max).map(|k| self.weight(k, r)).sum();
            return 1.0 - rest;
        }
        phi_j(j, r)
    }
}

/// Builds the partition and samples every block multiplier on the grid.
pub fn build_partition<T: Real>(grid: Grid) -> Result<DyadicPartition<T>> {
    let range = BlockRange::for_grid(&grid)?;
    let radii = grid.frequency_table();
    let weights = (range.j_min..=range.j_max)
        .map(|j| radii.par_iter().map(|&r| T::lit(range.weight(j, r))).collect())
        .collect();
    Ok(DyadicPartition { grid, j_min: range.j_min, j_max: range.j_max, weights })
}

impl<T: Real> DyadicPartition<T> {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn range(&self) -> BlockRange {
        BlockRange { j_min: self.j_min, j_max: self.j_max }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(LabError::BlockOutOfRange { j, j_min: self.j_min, j_max: self.j_max });
        }
        Ok(())
    }

    /// Sampled multiplier of block `j`.
    pub fn weights(&self, j: i32) -> Result<&[T]> {
        self.check(j)?;
        Ok(&self.weights[(j - self.j_min) as usize])
    }

    fn check_grid(&self, f: &SpectralField<T>) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(LabError::GridMismatch);
        }
        Ok(())
    }
}

/// `Δ_j f`.
pub fn block<T: Real>(f: &SpectralField<T>, partition: &DyadicPartition<T>, j: i32) -> Result<SpectralField<T>> {
    partition.check_grid(f)?;
    Ok(f.apply_weights(partition.weights(j)?))
}

/// `Δ_j f` of a sampled field, back in physical space.
pub fn block_field<T: Real>(f: &RealField<T>, partition: &DyadicPartition<T>, j: i32) -> Result<RealField<T>> {
    Ok(block(&forward_transform(f)?, partition, j)?.to_real())
}

/// `S_j f = Σ_{k ≤ j-1} Δ_k f`; the mean is never included.
pub fn low_pass<T: Real>(f: &SpectralField<T>, partition: &DyadicPartition<T>, j: i32) -> Result<SpectralField<T>> {
    partition.check_grid(f)?;
    if j < partition.j_min {
        return Err(LabError::BlockOutOfRange { j, j_min: partition.j_min, j_max: partition.j_max });
    }
    let top = (j - 1).min(partition.j_max);
    let n = partition.grid.len();
    let mut cumulative = vec![T::zero(); n];
    for k in partition.j_min..=top {
        let w = partition.weights(k)?;
        cumulative.par_iter_mut().zip(w).for_each(|(c, &x)| *c = *c + x);
    }
    Ok(f.apply_weights(&cumulative))
}

/// Every block of a field together with its mean channel.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition<T: Real> {
    pub grid: Grid,
    pub blocks: BTreeMap<i32, SpectralField<T>>,
    pub mean: Vec<T>,
}

/// Splits the dealiased field into blocks plus mean.
pub fn decompose<T: Real>(f: &RealField<T>, partition: &DyadicPartition<T>) -> Result<DyadicDecomposition<T>> {
    if f.grid() != &partition.grid {
        return Err(LabError::GridMismatch);
    }
    let spec = dealias(&forward_transform(f)?);
    let blocks = partition
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| block(&spec, partition, j).map(|b| (j, b)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mean = (0..f.components()).map(|c| spec.mean(c)).collect();
    Ok(DyadicDecomposition { grid: *f.grid(), blocks, mean })
}

impl<T: Real> DyadicDecomposition<T> {
    /// `Σ_j Δ_j f + mean`.
    pub fn reconstruct(&self) -> RealField<T> {
        let mut it = self.blocks.values();
        let mut acc = it.next().expect("partition has blocks").clone();
        for b in it {
            acc = acc.add(b).expect("blocks share a grid");
        }
        let mut out = acc.to_real();
        for (c, &m) in self.mean.iter().enumerate() {
            out.component_mut(c).iter_mut().for_each(|v| *v = *v + m);
        }
        out
    }

    /// `‖Δ_j f‖_p` for every block, in increasing `j`.
    pub fn block_norms(&self, p: T) -> Result<Vec<(i32, T)>> {
        self.blocks
            .par_iter()
            .map(|(&j, b)| Ok((j, lp_norm(&b.to_real(), p)?)))
            .collect()
    }
}

/// Bernstein ratio maxima over random shell-localized fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub j: i32,
    #[serde(with = "crate::exponent")]
    pub p: f64,
    #[serde(with = "crate::exponent")]
    pub q: f64,
    pub gamma: u32,
    pub max_forward: f64,
    pub max_reverse: f64,
    pub trials: usize,
    pub seed: u64,
}

/// `∇^k f` with all `dim^k` partial derivatives as components.
fn derivative_tensor<T: Real>(f: &SpectralField<T>, order: u32) -> Result<SpectralField<T>> {
    let mut out = f.clone();
    for _ in 0..order {
        out = jacobian(&out)?;
    }
    Ok(out)
}

/// Forward ratio `‖∇^k f‖_q / (2^{jk + dim·j(1/p-1/q)} ‖f‖_p)` and reverse ratio
/// `2^{jk}‖f‖_q / ‖∇^k f‖_q` for one field.
pub fn bernstein_ratios(f: &SpectralField<f64>, j: i32, p: f64, q: f64, order: u32) -> Result<(f64, f64)> {
    if !(p >= 1.0 && q >= p) {
        return Err(LabError::InvalidExponent(format!("need 1 <= p <= q, got p = {p}, q = {q}")));
    }
    let d = f.grid().dim() as f64;
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let f_real = f.to_real();
    let deriv = derivative_tensor(f, order)?.to_real();
    let fp = lp_norm(&f_real, p)?;
    let fq = lp_norm(&f_real, q)?;
    let dq = lp_norm(&deriv, q)?;
    if fp == 0.0 || dq == 0.0 {
        return Err(LabError::Degenerate("field vanishes on the shell".into()));
    }
    let jf = j as f64;
    let forward = dq / ((jf * order as f64 + d * jf * (inv(p) - inv(q))).exp2() * fp);
    let reverse = (jf * order as f64).exp2() * fq / dq;
    Ok((forward, reverse))
}

/// Test data for the Bernstein ratios.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellSample {
    /// Random phases over the whole shell; spread out in space.
    #[default]
    RandomPhase,
    /// `Δ_j` of a few weighted point masses; concentrated at scale `2^{-j}`.
    Localized,
}

/// Random field whose spectrum is confined to block `j`.
pub fn shell_field(partition: &DyadicPartition<f64>, j: i32, seed: u64) -> Result<SpectralField<f64>> {
    let grid = *partition.grid();
    let raw = RandomSpectrum::default().with_decay(0.0, 0.0).spectrum::<f64>(grid, 1, seed)?;
    let shell = block(&raw, partition, j)?;
    if shell.max_abs() == 0.0 {
        return Err(LabError::Degenerate(format!("shell {j} holds no retained modes")));
    }
    Ok(shell)
}

/// `Δ_j Σ w_i δ_{x_i}` for three seeded points and weights; the same seed
/// gives the same points on every shell.
pub fn localized_shell_field(partition: &DyadicPartition<f64>, j: i32, seed: u64) -> Result<SpectralField<f64>> {
    let grid = *partition.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = std::f64::consts::TAU * grid.box_scale();
    let masses: Vec<([f64; 3], f64)> = (0..3)
        .map(|_| {
            let mut x = [0.0; 3];
            for v in x.iter_mut().take(grid.dim()) {
                *v = rng.gen_range(0.0..period);
            }
            let w: f64 = rng.gen_range(0.5..1.5);
            (x, if rng.gen_bool(0.5) { w } else { -w })
        })
        .collect();
    let l = grid.box_scale();
    let coeffs = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let k = grid.wavevector(i);
            masses
                .iter()
                .map(|(x, w)| {
                    let phase: f64 = (0..3).map(|a| k[a] as f64 * x[a] / l).sum();
                    num_complex::Complex::from_polar(*w, -phase)
                })
                .sum()
        })
        .collect();
    let shell = block(&SpectralField::from_coeffs(grid, 1, coeffs)?, partition, j)?;
    if shell.max_abs() == 0.0 {
        return Err(LabError::Degenerate(format!("shell {j} holds no retained modes")));
    }
    Ok(shell)
}

/// Maxima of the Bernstein ratios over `trials` seeded shell fields.
#[allow(clippy::too_many_arguments)]
pub fn verify_bernstein(
    partition: &DyadicPartition<f64>,
    j: i32,
    p: f64,
    q: f64,
    gamma_order: u32,
    trials: usize,
    seed: u64,
    sample: ShellSample,
) -> Result<BernsteinReport> {
    partition.check(j)?;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let trial_seeds: Vec<u64> = (0..trials).map(|_| seeds.gen()).collect();
    let ratios = trial_seeds
        .par_iter()
        .map(|&s| {
            let f = match sample {
                ShellSample::RandomPhase => shell_field(partition, j, s)?,
                ShellSample::Localized => localized_shell_field(partition, j, s)?,
            };
            bernstein_ratios(&f, j, p, q, gamma_order)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_forward = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_reverse = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(BernsteinReport { j, p, q, gamma: gamma_order, max_forward, max_reverse, trials, seed })
}
