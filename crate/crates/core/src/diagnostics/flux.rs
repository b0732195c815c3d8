//! Effective viscous flux, vorticity, the Lamé inverse and the flux variable.

use serde::{Deserialize, Serialize};

use super::energy::momentum_forcing;
use crate::cns::momentum::split_apply;
use crate::cns::{FluidState, Trajectory};
use crate::error::{LabError, Result};
use crate::spectral::{curl, dealias, divergence, forward_transform, gradient, laplacian, lp_norm, RealField, SpectralField};

type Field = RealField<f64>;
type Spectrum = SpectralField<f64>;

/// `F̂ = (μ+λ) div û − (P̂ − P̄)`, with `P` dealiased.
fn flux_spectrum(state: &FluidState) -> Result<Spectrum> {
    let p = &state.params;
    let u_hat = forward_transform(&state.u)?;
    let mut p_hat = dealias(&forward_transform(&state.pressure_field())?);
    p_hat.coeffs_mut()[0].re -= p.pressure.p_bar();
    divergence(&u_hat)?.scale(p.mu + p.lambda).sub(&p_hat)
}

/// `F = (μ+λ) div u − P(ρ) + P(ρ̄)` and `ω = ∇×u`.
pub fn effective_viscous_flux(state: &FluidState) -> Result<(Field, Field)> {
    let f = flux_spectrum(state)?;
    let omega = curl(&forward_transform(&state.u)?)?;
    Ok((f.to_real(), omega.to_real()))
}

fn relative_gap(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    let scale = a.l2_norm().max(b.l2_norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(a.sub(b)?.l2_norm() / scale)
}

/// Relative `L²` residuals of `ΔF = div(ρu̇)` and `μΔω = ∇×(ρu̇)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxIdentityResiduals {
    pub t: f64,
    pub laplace_flux: f64,
    pub vorticity: f64,
}

pub fn flux_identity_residuals(state: &FluidState) -> Result<FluxIdentityResiduals> {
    let udot = super::energy::material_derivative(state)?;
    // ρ·u̇ pointwise, then back to spectral space
    let rho_udot = forward_transform(&udot.mul(&state.rho)?)?;
    let f = flux_spectrum(state)?;
    let laplace_flux = relative_gap(&laplacian(&f), &divergence(&rho_udot)?)?;
    let omega = curl(&forward_transform(&state.u)?)?;
    let vorticity = relative_gap(&laplacian(&omega).scale(state.params.mu), &curl(&rho_udot)?)?;
    Ok(FluxIdentityResiduals { t: state.t, laplace_flux, vorticity })
}

/// Tolerance on the per-component mean of a Lamé right-hand side.
pub const MEAN_ZERO_TOL: f64 = 1e-10;

/// `v = L⁻¹g` for `L = μΔ + λ∇div`; `g` must have zero mean in every component.
pub fn lame_solve(g: &Field, mu: f64, lambda: f64) -> Result<Field> {
    let grid = *g.grid();
    if g.components() != grid.dim() {
        return Err(LabError::ComponentMismatch { expected: grid.dim(), found: g.components() });
    }
    if !(mu > 0.0 && mu + lambda > 0.0) {
        return Err(LabError::Ellipticity(format!("mu = {mu}, lambda = {lambda}")));
    }
    let scale = g.max_abs().max(1.0);
    for c in 0..grid.dim() {
        let m = g.mean(c);
        if m.abs() > MEAN_ZERO_TOL * scale {
            return Err(LabError::NotMeanZero(m / scale));
        }
    }
    let k2: Vec<f64> = grid.frequency_table().into_iter().map(|k| k * k).collect();
    let inv = |rate: f64| -> Vec<f64> { k2.iter().map(|&q| if q == 0.0 { 0.0 } else { -1.0 / (rate * q) }).collect() };
    let spec = forward_transform(g)?;
    Ok(split_apply(&spec, &inv(mu), &inv(mu + lambda)).to_real())
}

/// `w = u − L⁻¹∇P(ρ)` together with `div w`.
#[derive(Clone, Debug)]
pub struct FluxVariable {
    pub w: Field,
    pub div_w: Field,
    /// Relative `L²` gap between `(μ+λ) div w` and `F`, both with their means removed.
    pub flux_mismatch: f64,
    /// Mean of `F`; `(μ+λ) div w` always has zero mean.
    pub flux_mean: f64,
}

pub fn flux_variable(state: &FluidState) -> Result<FluxVariable> {
    let p = &state.params;
    let p_hat = dealias(&forward_transform(&state.pressure_field())?);
    let v = lame_solve(&gradient(&p_hat)?.to_real(), p.mu, p.lambda)?;
    let w = state.u.sub(&v)?;
    let div_w = divergence(&forward_transform(&w)?)?;
    let f = flux_spectrum(state)?;
    let flux_mean = f.mean(0);
    let mismatch = relative_gap(&div_w.scale(p.mu + p.lambda).without_mean(), &f.without_mean())?;
    Ok(FluxVariable { w, div_w: div_w.to_real(), flux_mismatch: mismatch, flux_mean })
}

/// Ratios of the two elliptic bounds on `‖∇u‖_p` at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxBoundReport {
    pub t: f64,
    pub p: f64,
    pub grad_u: f64,
    /// `‖∇u‖_p / (‖F‖_p + ‖ω‖_p + ‖P − P̄‖_p)`; `None` when the denominator vanishes.
    pub first_ratio: Option<f64>,
    /// `‖∇u‖_p / (‖∇u‖₂^{(6−p)/(2p)} (‖ρu̇‖₂ + ‖P − P̄‖₆)^{(3p−6)/(2p)})`.
    pub second_ratio: Option<f64>,
}

impl FluxBoundReport {
    pub fn degenerate(&self) -> bool {
        self.first_ratio.is_none() || self.second_ratio.is_none()
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 && den > 1e-12 * num {
        Some(num / den)
    } else {
        None
    }
}

pub fn verify_flux_elliptic_bounds(state: &FluidState, p: f64) -> Result<FluxBoundReport> {
    if !(2.0..=6.0).contains(&p) {
        return Err(LabError::InvalidExponent(format!("p = {p} outside [2, 6]")));
    }
    let u_hat = forward_transform(&state.u)?;
    let jac = crate::spectral::jacobian(&u_hat)?;
    let grad_u = lp_norm(&jac.to_real(), p)?;
    let grad_u2 = jac.l2_norm();
    let (f, omega) = effective_viscous_flux(state)?;
    let pb = state.params.pressure.p_bar();
    let dp = state.pressure_field().add_scalar(-pb);
    let first = lp_norm(&f, p)? + lp_norm(&omega, p)? + lp_norm(&dp, p)?;
    let rho_udot = momentum_forcing(state)?.l2_norm();
    let second = grad_u2.powf((6.0 - p) / (2.0 * p)) * (rho_udot + lp_norm(&dp, 6.0)?).powf((3.0 * p - 6.0) / (2.0 * p));
    Ok(FluxBoundReport { t: state.t, p, grad_u, first_ratio: ratio(grad_u, first), second_ratio: ratio(grad_u, second) })
}

/// Elliptic-bound ratios over a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxBoundSeries {
    pub reports: Vec<FluxBoundReport>,
    /// Largest max/min spread of each ratio over the non-degenerate snapshots.
    pub first_drift: f64,
    pub second_drift: f64,
    /// Set when either spread exceeds 2.
    pub drift_flag: bool,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi == 0.0 || !lo.is_finite() {
        1.0
    } else {
        hi / lo
    }
}

pub fn flux_bound_series(traj: &Trajectory, p: f64) -> Result<FluxBoundSeries> {
    use rayon::prelude::*;
    let reports = (0..traj.len())
        .into_par_iter()
        .map(|i| verify_flux_elliptic_bounds(&traj.state(i), p))
        .collect::<Result<Vec<_>>>()?;
    let first_drift = spread(reports.iter().filter_map(|r| r.first_ratio));
    let second_drift = spread(reports.iter().filter_map(|r| r.second_ratio));
    Ok(FluxBoundSeries { drift_flag: first_drift > 2.0 || second_drift > 2.0, reports, first_drift, second_drift })
}
