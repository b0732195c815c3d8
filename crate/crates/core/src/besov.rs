//! Homogeneous Besov norms, time weights `ω_k(T)`, weighted Besov norms and
//! Chemin–Lerner space-time norms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::littlewood_paley::{decompose, DyadicPartition};
use crate::scalar::Real;
use crate::spectral::RealField;

/// Norm indices `(s, p, r)`; `p` and `r` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    #[serde(with = "crate::exponent")]
    pub p: f64,
    #[serde(with = "crate::exponent")]
    pub r: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !(p >= 1.0) || !(r >= 1.0) || !s.is_finite() {
            return Err(LabError::InvalidExponent(format!("Besov index (s={s}, p={p}, r={r})")));
        }
        Ok(BesovIndex { s, p, r })
    }
}

/// Parabolic weight with rate `c` and horizon `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub c: f64,
    pub horizon: f64,
}

impl WeightProfile {
    pub fn new(c: f64, horizon: f64) -> Result<Self> {
        if !(c > 0.0) || !(horizon >= 0.0) {
            return Err(LabError::InvalidParameter(format!("weight profile c={c}, T={horizon}")));
        }
        Ok(WeightProfile { c, horizon })
    }

    /// `e_ℓ(T) = (1 - exp(-c 4^ℓ T))^{1/2}`.
    pub fn e(&self, l: i32) -> f64 {
        if self.horizon.is_infinite() {
            return 1.0;
        }
        (-(-self.c * (2.0 * l as f64).exp2() * self.horizon).exp_m1()).sqrt()
    }

    /// `ω_k(T) = Σ_{ℓ≥k} 2^{k-ℓ} e_ℓ(T)`, summed until `e_ℓ` saturates and
    /// closed with the geometric tail.
    pub fn weight(&self, k: i32) -> f64 {
        if self.horizon == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        let mut l = k;
        loop {
            let e = self.e(l);
            if e >= 1.0 - 1e-14 {
                return sum + ((k - l + 1) as f64).exp2();
            }
            sum += ((k - l) as f64).exp2() * e;
            l += 1;
        }
    }
}

/// `ℓ^r` norm of a sequence; `r = ∞` takes the maximum.
pub fn lr_norm<T: Real>(values: impl IntoIterator<Item = T>, r: f64) -> T {
    if r.is_infinite() {
        return values.into_iter().fold(T::zero(), |m, v| m.max(v.abs()));
    }
    let rr = T::lit(r);
    let sum: T = values.into_iter().map(|v| v.abs().powf(rr)).sum();
    sum.powf(T::one() / rr)
}

/// `‖Δ_j f‖_p` for every block of `f` (dealiased, mean excluded).
pub fn block_norms<T: Real>(f: &RealField<T>, p: f64, partition: &DyadicPartition<T>) -> Result<Vec<(i32, T)>> {
    if !(p >= 1.0) {
        return Err(LabError::InvalidExponent(format!("p = {p}")));
    }
    decompose(f, partition)?.block_norms(T::lit(p))
}

/// `ℓ^r` sum of `2^{js} w_j a_j` over precomputed block norms.
pub fn norm_from_blocks<T: Real>(norms: &[(i32, T)], s: f64, r: f64, weight: impl Fn(i32) -> f64) -> T {
    lr_norm(norms.iter().map(|&(j, a)| T::lit((j as f64 * s).exp2() * weight(j)) * a), r)
}

/// `‖f‖_{Ḃ^s_{p,r}}`.
pub fn besov_norm<T: Real>(f: &RealField<T>, idx: BesovIndex, partition: &DyadicPartition<T>) -> Result<T> {
    let norms = block_norms(f, idx.p, partition)?;
    Ok(norm_from_blocks(&norms, idx.s, idx.r, |_| 1.0))
}

/// `‖f‖_{Ḃ^s_{p,r}(ω)}` with per-block factor `ω_j(T)`.
pub fn weighted_besov_norm<T: Real>(
    f: &RealField<T>,
    idx: BesovIndex,
    partition: &DyadicPartition<T>,
    profile: &WeightProfile,
) -> Result<T> {
    let norms = block_norms(f, idx.p, partition)?;
    Ok(norm_from_blocks(&norms, idx.s, idx.r, |j| profile.weight(j)))
}

/// Per-block `L^p` norms sampled along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockNormTrajectory {
    #[serde(with = "crate::exponent")]
    pub p: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub times: Vec<f64>,
    /// `norms[i][j - j_min] = ‖Δ_j f(t_i)‖_p`.
    pub norms: Vec<Vec<f64>>,
}

impl BlockNormTrajectory {
    pub fn new(p: f64, j_min: i32, j_max: i32) -> Self {
        BlockNormTrajectory { p, j_min, j_max, times: Vec::new(), norms: Vec::new() }
    }

    /// Appends one sample; times must increase strictly.
    pub fn push(&mut self, t: f64, norms: Vec<f64>) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(LabError::InvalidParameter(format!("time {t} not after {last}")));
            }
        }
        if norms.len() != (self.j_max - self.j_min + 1) as usize {
            return Err(LabError::ComponentMismatch {
                expected: (self.j_max - self.j_min + 1) as usize,
                found: norms.len(),
            });
        }
        if norms.iter().any(|v| !(*v >= 0.0)) {
            return Err(LabError::NonFinite);
        }
        self.times.push(t);
        self.norms.push(norms);
        Ok(())
    }

    /// Appends the block norms of one snapshot.
    pub fn push_field(&mut self, t: f64, f: &RealField<f64>, partition: &DyadicPartition<f64>) -> Result<()> {
        let norms = block_norms(f, self.p, partition)?.into_iter().map(|(_, v)| v).collect();
        self.push(t, norms)
    }

    /// Block norms of a sequence of snapshots, computed in parallel.
    pub fn from_fields(
        times: &[f64],
        fields: &[RealField<f64>],
        p: f64,
        partition: &DyadicPartition<f64>,
    ) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(LabError::ComponentMismatch { expected: times.len(), found: fields.len() });
        }
        let rows = fields
            .par_iter()
            .map(|f| Ok(block_norms(f, p, partition)?.into_iter().map(|(_, v)| v).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let mut out = Self::new(p, partition.j_min(), partition.j_max());
        for (t, row) in times.iter().zip(rows) {
            out.push(*t, row)?;
        }
        Ok(out)
    }

    pub fn horizon(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Time series of block `j`.
    pub fn series(&self, j: i32) -> Vec<f64> {
        let col = (j - self.j_min) as usize;
        self.norms.iter().map(|row| row[col]).collect()
    }

    /// Largest gap between consecutive samples.
    pub fn cadence(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// `L^q` norm in time of a sampled series by the trapezoid rule; `q = ∞` is the sample max.
pub fn time_norm(times: &[f64], values: &[f64], q: f64) -> Result<f64> {
    if q.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    if !(q >= 1.0) {
        return Err(LabError::InvalidExponent(format!("q = {q}")));
    }
    if times.len() < 2 {
        return Err(LabError::TooFewSamples(format!("{} time samples for q = {q}", times.len())));
    }
    let integral: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].abs().powf(q) + v[1].abs().powf(q)))
        .sum();
    Ok(integral.powf(1.0 / q))
}

/// `‖f‖_{L̃^q_T(Ḃ^s_{p,r})}`, optionally weighted by `ω_j`.
pub fn chemin_lerner_norm(
    traj: &BlockNormTrajectory,
    idx: BesovIndex,
    q: f64,
    profile: Option<&WeightProfile>,
) -> Result<f64> {
    if traj.p != idx.p {
        return Err(LabError::InvalidExponent(format!("trajectory p = {} but index p = {}", traj.p, idx.p)));
    }
    let per_block = (traj.j_min..=traj.j_max)
        .map(|j| {
            let w = profile.map_or(1.0, |pr| pr.weight(j));
            Ok((j as f64 * idx.s).exp2() * w * time_norm(&traj.times, &traj.series(j), q)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(lr_norm(per_block, idx.r))
}

/// `sup_t ‖f(t)‖_{Ḃ^s_{p,r}}` over the stored samples.
pub fn sup_in_time(traj: &BlockNormTrajectory, idx: BesovIndex) -> f64 {
    traj.norms
        .iter()
        .map(|row| lr_norm(row.iter().enumerate().map(|(i, &a)| ((traj.j_min + i as i32) as f64 * idx.s).exp2() * a), idx.r))
        .fold(0.0, f64::max)
}

/// One row of a norm report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub norm_kind: String,
    pub s: f64,
    #[serde(with = "crate::exponent")]
    pub p: f64,
    #[serde(with = "crate::exponent")]
    pub r: f64,
    /// Time exponent, rendered with [`crate::exponent::display`]; absent for snapshot norms.
    pub q: Option<String>,
    pub weighted: bool,
    pub value: f64,
    pub grid: crate::spectral::GridSpec,
    pub partition_range: (i32, i32),
    pub cadence: Option<f64>,
}
