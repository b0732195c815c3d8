//! Variable-coefficient linear momentum equation
//! `∂_t u − div(μ̄∇u) − ∇(λ̄ div u) = G` with `μ̄ = μ/ρ`, `λ̄ = λ/ρ`.
//!
//! The mean-coefficient Lamé part is integrated exactly per Fourier mode
//! (transverse rate `μ̃|ξ|²`, longitudinal `(μ̃+λ̃)|ξ|²`); the remainder and
//! the forcing are treated explicitly with exponential-time-differencing
//! RK4, which keeps steady states fixed.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::CFL_SAFETY;
use super::transport::TimeField;
use crate::besov::{lr_norm, WeightProfile};
use crate::error::{LabError, Result};
use crate::littlewood_paley::{build_partition, DyadicPartition};
use crate::spectral::{curl, dealias, divergence, forward_transform, gradient, jacobian, Grid, RealField, SpectralField};

type Field = RealField<f64>;
type Spectrum = SpectralField<f64>;

/// `μ̄ = μ/ρ` and `λ̄ = λ/ρ` for a fixed density field.
#[derive(Clone, Debug)]
pub struct MomentumCoefficients {
    pub rho: Field,
    pub mu_bar: Field,
    pub lambda_bar: Field,
    /// `min(min μ̄, min(μ̄ + λ̄))`
    pub c3: f64,
}

impl MomentumCoefficients {
    pub fn new(rho: &Field, mu: f64, lambda: f64) -> Result<Self> {
        if rho.components() != 1 {
            return Err(LabError::ComponentMismatch { expected: 1, found: rho.components() });
        }
        if !(rho.min() > 0.0) {
            return Err(LabError::Ellipticity(format!("density minimum {} not positive", rho.min())));
        }
        let mu_bar = rho.map(|r| mu / r);
        let lambda_bar = rho.map(|r| lambda / r);
        let c3 = mu_bar.min().min(mu_bar.add(&lambda_bar)?.min());
        if !(c3 > 0.0) {
            return Err(LabError::Ellipticity(format!("c3 = {c3}")));
        }
        Ok(MomentumCoefficients { rho: rho.clone(), mu_bar, lambda_bar, c3 })
    }

    fn means(&self) -> (f64, f64) {
        (self.mu_bar.mean(0), self.lambda_bar.mean(0))
    }
}

/// Applies per-mode multipliers to the transverse and longitudinal parts of a vector spectrum.
pub(crate) fn split_apply(u: &Spectrum, transverse: &[f64], longitudinal: &[f64]) -> Spectrum {
    let grid = *u.grid();
    let (n, dim) = (grid.len(), grid.dim());
    let src = u.coeffs();
    let scale = 1.0 / grid.box_scale();
    let rows: Vec<[Complex<f64>; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let kv = grid.wavevector(i);
            let mut k = [0.0; 3];
            let mut vals = [Complex::new(0.0, 0.0); 3];
            for a in 0..dim {
                k[a] = kv[a] as f64 * scale;
                vals[a] = src[a * n + i];
            }
            let k2: f64 = k.iter().map(|x| x * x).sum();
            if k2 == 0.0 {
                return vals.map(|v| v * transverse[i]);
            }
            let proj = (0..dim).map(|a| vals[a] * k[a]).sum::<Complex<f64>>() / k2;
            let mut out = [Complex::new(0.0, 0.0); 3];
            for c in 0..dim {
                let long = proj * k[c];
                out[c] = (vals[c] - long) * transverse[i] + long * longitudinal[i];
            }
            out
        })
        .collect();
    let mut out = u.clone();
    let coeffs = out.coeffs_mut();
    for (i, row) in rows.into_iter().enumerate() {
        for c in 0..dim {
            coeffs[c * n + i] = row[c];
        }
    }
    out
}

/// `e^{hL}` for the constant-coefficient Lamé symbol.
pub fn lame_semigroup(u: &Spectrum, mu: f64, lambda: f64, h: f64) -> Spectrum {
    let k2 = frequency_squares(u.grid());
    let t: Vec<f64> = k2.iter().map(|&q| (-h * mu * q).exp()).collect();
    let l: Vec<f64> = k2.iter().map(|&q| (-h * (mu + lambda) * q).exp()).collect();
    split_apply(u, &t, &l)
}

fn frequency_squares(grid: &Grid) -> Vec<f64> {
    grid.frequency_table().into_iter().map(|k| k * k).collect()
}

/// Scalar exponential-integrator coefficients `(e^z, e^{z/2}, Q, f₁, f₂, f₃)` divided
/// by `h` where applicable, evaluated by a contour mean to avoid cancellation.
fn etd_scalars(z: f64) -> [f64; 6] {
    const M: usize = 32;
    let mut acc = [0.0; 4];
    for m in 0..M {
        let theta = std::f64::consts::PI * (m as f64 + 0.5) / M as f64;
        let w = Complex::new(z, 0.0) + Complex::from_polar(1.0, theta);
        let (e, e2) = (w.exp(), (w * 0.5).exp());
        let w3 = w * w * w;
        acc[0] += ((e2 - 1.0) / w).re;
        acc[1] += ((-4.0 - w + e * (4.0 - 3.0 * w + w * w)) / w3).re;
        acc[2] += ((2.0 + w + e * (w - 2.0)) / w3).re;
        acc[3] += ((-4.0 - 3.0 * w - w * w + e * (4.0 - w)) / w3).re;
    }
    let m = M as f64;
    [z.exp(), (0.5 * z).exp(), acc[0] / m, acc[1] / m, acc[2] / m, acc[3] / m]
}

/// Per-mode coefficient tables for one step size.
struct EtdTables {
    table: [[Vec<f64>; 2]; 6],
}

impl EtdTables {
    fn new(grid: &Grid, mu: f64, lambda: f64, h: f64) -> Self {
        let k2 = frequency_squares(grid);
        let mut table: [[Vec<f64>; 2]; 6] = Default::default();
        for (side, rate) in [mu, mu + lambda].into_iter().enumerate() {
            let vals: Vec<[f64; 6]> = k2.par_iter().map(|&q| etd_scalars(-h * rate * q)).collect();
            for (c, slot) in table.iter_mut().enumerate() {
                let scale = if c < 2 { 1.0 } else { h };
                slot[side] = vals.iter().map(|v| v[c] * scale).collect();
            }
        }
        EtdTables { table }
    }

    fn apply(&self, c: usize, u: &Spectrum) -> Spectrum {
        split_apply(u, &self.table[c][0], &self.table[c][1])
    }
}

/// `div(δμ ∇u) + ∇(δλ div u)` with `δ` the deviation from the mean.
fn variable_part(u: &Spectrum, coeffs: &MomentumCoefficients) -> Result<Spectrum> {
    let grid = *u.grid();
    let dim = grid.dim();
    let (m_mu, m_lambda) = coeffs.means();
    let d_mu = coeffs.mu_bar.add_scalar(-m_mu);
    let d_lambda = coeffs.lambda_bar.add_scalar(-m_lambda);
    let jac = jacobian(u)?.to_real();
    let mut parts = Vec::with_capacity(dim);
    for i in 0..dim {
        let row = Field::stack(&(0..dim).map(|a| jac.extract(i * dim + a)).collect::<Vec<_>>())?;
        let flux = dealias(&forward_transform(&row.mul(&d_mu)?)?);
        parts.push(divergence(&flux)?);
    }
    let visc = Spectrum::stack(&parts)?;
    let div = divergence(u)?.to_real();
    let bulk = dealias(&forward_transform(&div.mul(&d_lambda)?)?);
    visc.add(&gradient(&bulk)?)
}

/// Explicit-step bound from the coefficient deviation.
pub fn explicit_dt(coeffs: &MomentumCoefficients) -> f64 {
    let dx = coeffs.rho.grid().spacing();
    let (m_mu, m_lambda) = coeffs.means();
    let dev_mu = coeffs.mu_bar.add_scalar(-m_mu).max_abs();
    let dev_lambda = coeffs.lambda_bar.add_scalar(-m_lambda).max_abs();
    let stiff = 2.0 * (2.0 * dev_mu + dev_lambda);
    if stiff == 0.0 {
        f64::INFINITY
    } else {
        CFL_SAFETY * dx * dx / stiff
    }
}

/// Samples of a momentum run.
#[derive(Clone, Debug)]
pub struct MomentumRun {
    pub times: Vec<f64>,
    pub u: Vec<Field>,
    pub g: Vec<Field>,
    pub coefficients: MomentumCoefficients,
}

/// Integrates to `t_end`, storing `samples ≥ 2` uniform snapshots.
pub fn solve_linear_momentum(
    u0: &Field,
    coefficients: MomentumCoefficients,
    g: &TimeField,
    t_end: f64,
    samples: usize,
) -> Result<MomentumRun> {
    let grid = *u0.grid();
    if u0.components() != grid.dim() {
        return Err(LabError::ComponentMismatch { expected: grid.dim(), found: u0.components() });
    }
    if coefficients.rho.grid() != &grid {
        return Err(LabError::GridMismatch);
    }
    if samples < 2 || !(t_end > 0.0) {
        return Err(LabError::InvalidParameter(format!("samples = {samples}, t_end = {t_end}")));
    }
    let (m_mu, m_lambda) = coefficients.means();
    let explicit = |t: f64, u: &Spectrum| -> Result<Spectrum> {
        let gt = dealias(&forward_transform(&g(t)?)?);
        variable_part(u, &coefficients)?.add(&gt)
    };
    let times: Vec<f64> = (0..samples).map(|i| t_end * i as f64 / (samples - 1) as f64).collect();
    let dt_max = explicit_dt(&coefficients);
    let mut u = dealias(&forward_transform(u0)?);
    let mut out = vec![u.to_real()];
    let mut tables: Option<(f64, EtdTables)> = None;
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let m = if dt_max.is_finite() { (span / dt_max).ceil().max(1.0) as usize } else { 1 };
        let h = span / m as f64;
        if tables.as_ref().is_none_or(|(h0, _)| *h0 != h) {
            tables = Some((h, EtdTables::new(&grid, m_mu, m_lambda, h)));
        }
        let tb = &tables.as_ref().unwrap().1;
        for i in 0..m {
            let t = w[0] + i as f64 * h;
            // Cox–Matthews ETD-RK4
            let nu = explicit(t, &u)?;
            let eu = tb.apply(1, &u);
            let a = eu.add(&tb.apply(2, &nu))?;
            let na = explicit(t + 0.5 * h, &a)?;
            let b = eu.add(&tb.apply(2, &na))?;
            let nb = explicit(t + 0.5 * h, &b)?;
            let c = tb.apply(1, &a).add(&tb.apply(2, &nb.scale(2.0).sub(&nu)?))?;
            let nc = explicit(t + h, &c)?;
            u = tb
                .apply(0, &u)
                .add(&tb.apply(3, &nu))?
                .add(&tb.apply(4, &na.add(&nb)?).scale(2.0))?
                .add(&tb.apply(5, &nc))?;
        }
        let field = u.to_real();
        if !field.is_finite() {
            return Err(LabError::NonFiniteState { t: w[1] });
        }
        out.push(field);
    }
    let g_samples = times.iter().map(|&t| g(t)).collect::<Result<Vec<_>>>()?;
    Ok(MomentumRun { times, u: out, g: g_samples, coefficients })
}

/// Both sides of the momentum bound and the fitted constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumReport {
    pub s: f64,
    #[serde(with = "crate::exponent")]
    pub p: f64,
    pub weighted: bool,
    pub samples: usize,
    /// Weight rate `c_p`, set to `c₃`.
    pub c_p: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Largest `lhs/rhs` over every prefix `[0, t_i]` with `i ≥ 1`.
    pub fitted_c: f64,
}

/// Per-block `‖Δ_j f‖_p`, combining components pointwise.
fn rows(fields: &[Field], p: f64, part: &DyadicPartition<f64>) -> Result<Vec<Vec<f64>>> {
    fields
        .par_iter()
        .map(|f| Ok(crate::besov::block_norms(f, p, part)?.into_iter().map(|(_, v)| v).collect()))
        .collect()
}

/// `‖·‖_{L̃^q_{t_i}(Ḃ^s_{p,1}(ω?))}` on the prefix `0..=i`.
fn prefix_norm(times: &[f64], rows: &[Vec<f64>], j_min: i32, s: f64, q: f64, i: usize, w: Option<&WeightProfile>) -> Result<f64> {
    let blocks = rows[0].len();
    let per = (0..blocks)
        .map(|b| {
            let j = j_min + b as i32;
            let series: Vec<f64> = rows[..=i].iter().map(|r| r[b]).collect();
            let t = if i == 0 { series[0] } else { crate::besov::time_norm(&times[..=i], &series, q)? };
            Ok((j as f64 * s).exp2() * w.map_or(1.0, |w| w.weight(j)) * t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(lr_norm(per, 1.0))
}

/// Fits `C` in `‖u‖_{L̃¹(Ḃ^{s+1})} + ‖u‖_{L̃²(Ḃ^s)} ≤ C(‖u₀‖_{Ḃ^{s-1}(ω)} + ‖G‖_{L̃¹(Ḃ^{s-1}(ω))} + A(T)‖ρ−ρ̄‖_{Ḃ^{d/p}(ω)}‖u‖_{L̃¹(Ḃ^{s+1})})`.
pub fn verify_momentum_estimate(run: &MomentumRun, s: f64, p: f64, weighted: bool) -> Result<MomentumReport> {
    let grid = *run.u[0].grid();
    let d = grid.dim() as f64;
    if !(p >= 2.0 && p.is_finite()) || !(s > 1.0 - d / p && s <= d / p) {
        return Err(LabError::ConstraintViolated {
            id: "momentum".into(),
            detail: format!("need p in [2, inf) and s in ({}, {}], got s = {s}, p = {p}", 1.0 - d / p, d / p),
        });
    }
    let part = build_partition::<f64>(grid)?;
    let u_rows = rows(&run.u, p, &part)?;
    let g_rows = rows(&run.g, p, &part)?;
    let coeffs = &run.coefficients;
    let rho_dev = coeffs.rho.add_scalar(-coeffs.rho.mean(0));
    let rho_rows = crate::besov::block_norms(&rho_dev, p, &part)?;
    let a_t = (1.0 + coeffs.rho.max_abs()).powi((d / p).floor() as i32 + 2);
    let c_p = coeffs.c3;
    let mut fitted: f64 = 0.0;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 1..run.times.len() {
        let profile = WeightProfile::new(c_p, run.times[i] - run.times[0])?;
        let w = weighted.then_some(&profile);
        let l1 = prefix_norm(&run.times, &u_rows, part.j_min(), s + 1.0, 1.0, i, None)?;
        let l2 = prefix_norm(&run.times, &u_rows, part.j_min(), s, 2.0, i, None)?;
        let u0 = prefix_norm(&run.times, &u_rows, part.j_min(), s - 1.0, 1.0, 0, w)?;
        let gn = prefix_norm(&run.times, &g_rows, part.j_min(), s - 1.0, 1.0, i, w)?;
        let rho_norm =
            crate::besov::norm_from_blocks(&rho_rows, d / p, 1.0, |j| w.map_or(1.0, |w| w.weight(j)));
        lhs = l1 + l2;
        rhs = u0 + gn + a_t * rho_norm * l1;
        if rhs > 0.0 {
            fitted = fitted.max(lhs / rhs);
        } else if lhs > 0.0 {
            return Err(LabError::Degenerate(format!("momentum rhs vanishes with lhs {lhs}")));
        }
    }
    Ok(MomentumReport { s, p, weighted, samples: run.times.len(), c_p, lhs, rhs, fitted_c: fitted })
}

/// `(‖Δ_j d‖_p + ‖Δ_j w‖_p) / (2^j ‖Δ_j u‖_p)` per block, `d = div u`, `w = curl u`.
pub fn div_curl_ratios(u: &Field, p: f64, part: &DyadicPartition<f64>) -> Result<Vec<(i32, f64)>> {
    let spec = forward_transform(u)?;
    let d = divergence(&spec)?.to_real();
    let w = curl(&spec)?.to_real();
    let nu = crate::besov::block_norms(u, p, part)?;
    let nd = crate::besov::block_norms(&d, p, part)?;
    let nw = crate::besov::block_norms(&w, p, part)?;
    let top = nu.iter().fold(0.0_f64, |m, &(_, v)| m.max(v));
    Ok(nu
        .iter()
        .zip(nd.iter().zip(&nw))
        .filter(|((_, a), _)| *a > 1e-10 * top)
        .map(|(&(j, a), (&(_, b), &(_, c)))| (j, (b + c) / ((j as f64).exp2() * a)))
        .collect())
}

/// `G ≡ 0`.
pub fn zero_forcing(grid: Grid) -> impl Fn(f64) -> Result<Field> + Sync {
    move |_t| Ok(Field::zeros(grid, grid.dim()))
}
