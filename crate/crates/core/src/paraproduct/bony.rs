//! Bony's splitting of a product, block commutators and pointwise
//! nonlinearities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::littlewood_paley::{block, DyadicPartition};
use crate::scalar::Real;
use crate::spectral::{dealias, forward_transform, gradient, RealField, SpectralField};

/// `uv = T_u v + T_v u + R(u, v) + mean_correction`, every term dealiased.
#[derive(Clone, Debug)]
pub struct BonyTerms<T: Real> {
    pub t_uv: RealField<T>,
    pub t_vu: RealField<T>,
    pub r_uv: RealField<T>,
    pub mean_correction: RealField<T>,
}

impl<T: Real> BonyTerms<T> {
    pub fn sum(&self) -> RealField<T> {
        self.t_uv
            .add(&self.t_vu)
            .and_then(|s| s.add(&self.r_uv))
            .and_then(|s| s.add(&self.mean_correction))
            .expect("terms share a grid")
    }
}

/// Dealiased mean-free part, its mean, and its blocks in physical space.
struct Blocks<T: Real> {
    mean: T,
    fluct: RealField<T>,
    blocks: Vec<RealField<T>>,
}

fn split<T: Real>(f: &RealField<T>, partition: &DyadicPartition<T>) -> Result<Blocks<T>> {
    if f.components() != 1 {
        return Err(LabError::ComponentMismatch { expected: 1, found: f.components() });
    }
    if f.grid() != partition.grid() {
        return Err(LabError::GridMismatch);
    }
    let spec = dealias(&forward_transform(f)?);
    let mean = spec.mean(0);
    let blocks = partition
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| Ok(block(&spec, partition, j)?.to_real()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Blocks { mean, fluct: spec.without_mean().to_real(), blocks })
}

fn accumulate<T: Real>(acc: &mut [T], a: &[T], b: &[T]) {
    acc.par_iter_mut().zip(a.par_iter().zip(b)).for_each(|(s, (&x, &y))| *s = *s + x * y);
}

fn project<T: Real>(f: RealField<T>) -> RealField<T> {
    dealias(&forward_transform(&f).expect("finite products")).to_real()
}

/// `Σ_j S_{j-1} low · Δ_j high` over precomputed blocks.
fn paraproduct_from<T: Real>(low: &Blocks<T>, high: &Blocks<T>) -> RealField<T> {
    let grid = *low.fluct.grid();
    let mut acc = RealField::zeros(grid, 1);
    let mut s = vec![T::zero(); grid.len()];
    // S_{j-1} = Σ_{k ≤ j-2} Δ_k
    for (i, hj) in high.blocks.iter().enumerate() {
        if i >= 2 {
            let add = low.blocks[i - 2].values();
            s.par_iter_mut().zip(add).for_each(|(x, &y)| *x = *x + y);
            accumulate(acc.values_mut(), &s, hj.values());
        }
    }
    project(acc)
}

fn remainder_from<T: Real>(u: &Blocks<T>, v: &Blocks<T>) -> RealField<T> {
    let grid = *u.fluct.grid();
    let m = u.blocks.len();
    let mut acc = RealField::zeros(grid, 1);
    for i in 0..m {
        for k in i.saturating_sub(1)..=(i + 1).min(m - 1) {
            accumulate(acc.values_mut(), u.blocks[i].values(), v.blocks[k].values());
        }
    }
    project(acc)
}

/// Bony decomposition of the product of two scalar fields.
pub fn bony<T: Real>(u: &RealField<T>, v: &RealField<T>, partition: &DyadicPartition<T>) -> Result<BonyTerms<T>> {
    if u.grid() != v.grid() {
        return Err(LabError::GridMismatch);
    }
    let bu = split(u, partition)?;
    let bv = split(v, partition)?;
    let t_uv = paraproduct_from(&bu, &bv);
    let t_vu = paraproduct_from(&bv, &bu);
    let r_uv = remainder_from(&bu, &bv);
    let grid = *u.grid();
    let (mu, mv) = (bu.mean, bv.mean);
    let values = bu
        .fluct
        .values()
        .par_iter()
        .zip(bv.fluct.values())
        .map(|(&a, &b)| mu * b + mv * a + mu * mv)
        .collect();
    let mean_correction = project(RealField::from_values(grid, 1, values)?);
    Ok(BonyTerms { t_uv, t_vu, r_uv, mean_correction })
}

/// `T_low high = Σ_j S_{j-1} low · Δ_j high`.
pub fn paraproduct<T: Real>(low: &RealField<T>, high: &RealField<T>, partition: &DyadicPartition<T>) -> Result<RealField<T>> {
    if low.grid() != high.grid() {
        return Err(LabError::GridMismatch);
    }
    Ok(paraproduct_from(&split(low, partition)?, &split(high, partition)?))
}

/// `R(u, v) = Σ_j Δ_j u · Δ̃_j v`.
pub fn remainder<T: Real>(u: &RealField<T>, v: &RealField<T>, partition: &DyadicPartition<T>) -> Result<RealField<T>> {
    if u.grid() != v.grid() {
        return Err(LabError::GridMismatch);
    }
    Ok(remainder_from(&split(u, partition)?, &split(v, partition)?))
}

/// Dealiased pointwise product; a scalar factor broadcasts over components.
pub fn dealiased_product<T: Real>(a: &RealField<T>, b: &RealField<T>) -> Result<RealField<T>> {
    Ok(project(a.mul(b)?))
}

/// Shared pieces of `[Δ_j, f]∇g` for every `j`.
struct CommutatorParts<T: Real> {
    f: RealField<T>,
    f_grad_g: SpectralField<T>,
    grad_g: SpectralField<T>,
}

fn commutator_parts<T: Real>(f: &RealField<T>, g: &RealField<T>) -> Result<CommutatorParts<T>> {
    if f.grid() != g.grid() {
        return Err(LabError::GridMismatch);
    }
    if f.components() != 1 || g.components() != 1 {
        return Err(LabError::ComponentMismatch { expected: 1, found: f.components().max(g.components()) });
    }
    let f = dealias(&forward_transform(f)?).to_real();
    let grad_g = dealias(&gradient(&forward_transform(g)?)?);
    let f_grad_g = dealias(&forward_transform(&f.mul(&grad_g.to_real())?)?);
    Ok(CommutatorParts { f, f_grad_g, grad_g })
}

fn commutator_from<T: Real>(parts: &CommutatorParts<T>, partition: &DyadicPartition<T>, j: i32) -> Result<RealField<T>> {
    let first = block(&parts.f_grad_g, partition, j)?.to_real();
    let second = dealiased_product(&parts.f, &block(&parts.grad_g, partition, j)?.to_real())?;
    first.sub(&second)
}

/// `[Δ_j, f]∇g = Δ_j(f∇g) − f Δ_j∇g` with dealiased products (`dim` components).
pub fn commutator_block<T: Real>(
    f: &RealField<T>,
    g: &RealField<T>,
    partition: &DyadicPartition<T>,
    j: i32,
) -> Result<RealField<T>> {
    commutator_from(&commutator_parts(f, g)?, partition, j)
}

/// Commutator blocks for every resolved `j`, in increasing order.
pub fn commutator_blocks<T: Real>(
    f: &RealField<T>,
    g: &RealField<T>,
    partition: &DyadicPartition<T>,
) -> Result<Vec<(i32, RealField<T>)>> {
    let parts = commutator_parts(f, g)?;
    partition
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| Ok((j, commutator_from(&parts, partition, j)?)))
        .collect()
}

/// Smooth scalar maps with `F(0) = 0` used by the composition checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Identity,
    Square,
    Cube,
    /// `x / (1 + x)`
    Rational,
    /// `P(ρ̄(1+x)) − P(ρ̄)` for `P(ρ) = Aρ^γ`.
    Pressure { a: f64, gamma: f64, rho_bar: f64 },
}

impl Nonlinearity {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Nonlinearity::Identity => x,
            Nonlinearity::Square => x * x,
            Nonlinearity::Cube => x * x * x,
            Nonlinearity::Rational => x / (1.0 + x),
            Nonlinearity::Pressure { a, gamma, rho_bar } => a * (rho_bar * (1.0 + x)).powf(gamma) - a * rho_bar.powf(gamma),
        }
    }

    /// Field `F(f)`, dealiased.
    pub fn compose(&self, f: &RealField<f64>) -> Result<RealField<f64>> {
        let out = f.map(|x| self.apply(x));
        if !out.is_finite() {
            return Err(LabError::NonFinite);
        }
        Ok(project(out))
    }
}
