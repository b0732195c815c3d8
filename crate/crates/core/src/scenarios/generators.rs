//! Deterministic initial-data generators.

use serde::{Deserialize, Serialize};

use super::config::{DensityRecipe, InitialData, Mode, OscillationVariant, PhiProfile, VelocityRecipe};
use crate::cns::{FluidParams, FluidState};
use crate::error::{LabError, Result};
use crate::spectral::{dealias_field, divergence, forward_transform, gradient, lp_norm, Grid, RealField};

type Field = RealField<f64>;

fn box_center(grid: &Grid) -> [f64; 3] {
    let half = std::f64::consts::PI * grid.box_scale();
    let mut c = [0.0; 3];
    for slot in c.iter_mut().take(grid.dim()) {
        *slot = half;
    }
    c
}

/// Squared minimum-image distance on the torus.
fn periodic_dist2(grid: &Grid, x: &[f64; 3], c: &[f64; 3]) -> f64 {
    let period = std::f64::consts::TAU * grid.box_scale();
    (0..grid.dim())
        .map(|a| {
            let d = (x[a] - c[a]).rem_euclid(period);
            let d = d.min(period - d);
            d * d
        })
        .sum()
}

/// Gaussian bump summed over the nearest periodic images.
pub fn phi_field(grid: Grid, phi: &PhiProfile) -> Result<Field> {
    if !(phi.width > 0.0) || !phi.amplitude.is_finite() {
        return Err(LabError::InvalidParameter(format!("phi width {} amplitude {}", phi.width, phi.amplitude)));
    }
    let c = phi.center.unwrap_or_else(|| box_center(&grid));
    let period = std::f64::consts::TAU * grid.box_scale();
    let dim = grid.dim();
    let (a, w) = (phi.amplitude, phi.width);
    Ok(Field::from_fn(grid, 1, move |x, _| {
        let mut acc = 0.0;
        let images = 3usize.pow(dim as u32);
        for img in 0..images {
            let mut r2 = 0.0;
            let mut rest = img;
            for axis in 0..dim {
                let shift = (rest % 3) as f64 - 1.0;
                rest /= 3;
                let d = x[axis] - c[axis] + shift * period;
                r2 += d * d;
            }
            acc += (-r2 / (2.0 * w * w)).exp();
        }
        a * acc
    }))
}

/// Integer wavenumber realizing `sin(x/ε)` and the corresponding `ε`.
pub fn realized_wavenumber(grid: &Grid, eps: f64) -> Result<(i64, f64)> {
    if !(eps > 0.0) {
        return Err(LabError::Unresolvable(format!("eps = {eps}")));
    }
    let m = (1.0 / eps).round() as i64;
    if m < 1 || 2 * m > grid.k_cut() {
        return Err(LabError::Unresolvable(format!("1/eps = {} exceeds K_cut/2 = {}", 1.0 / eps, grid.k_cut() as f64 / 2.0)));
    }
    Ok((m, grid.box_scale() / m as f64))
}

/// Oscillating velocity along the last axis, dealiased.
pub fn oscillating_velocity(grid: Grid, eps: f64, phi: &PhiProfile, variant: OscillationVariant) -> Result<Field> {
    let (m, _) = realized_wavenumber(&grid, eps)?;
    let dim = grid.dim();
    let last = dim - 1;
    let k = m as f64 / grid.box_scale();
    let osc = Field::from_fn(grid, 1, move |x, _| (k * x[last]).sin());
    let base = phi_field(grid, phi)?;
    let u = match variant {
        OscillationVariant::Scalar => {
            let v = base.mul(&osc)?;
            Field::stack(&vec![v; dim])?
        }
        OscillationVariant::Curl => {
            if dim != 3 {
                return Err(LabError::InvalidParameter("curl variant needs a 3D grid".into()));
            }
            let g = gradient(&forward_transform(&base)?)?.to_real();
            Field::stack(&[g.extract(1).scale(-1.0).mul(&osc)?, g.extract(0).mul(&osc)?, Field::zeros(grid, 1)])?
        }
    };
    dealias_field(&u)
}

/// Bump density with its deviation norms.
#[derive(Clone, Debug)]
pub struct BumpDensity {
    pub rho: Field,
    /// `‖ρ − ρ̄‖₂`
    pub l2_deviation: f64,
    /// `‖ρ − ρ̄‖_∞`
    pub sup_deviation: f64,
}

/// `ρ̄ + amplitude·χ` with `χ` a ball indicator smoothed over two cells, dealiased.
pub fn bump_density(grid: Grid, rho_bar: f64, c0: f64, amplitude: f64, radius: f64, center: Option<[f64; 3]>) -> Result<BumpDensity> {
    if !(radius >= 0.0) {
        return Err(LabError::InvalidParameter(format!("radius = {radius}")));
    }
    let c = center.unwrap_or_else(|| box_center(&grid));
    let h = 2.0 * grid.spacing();
    let raw = Field::from_fn(grid, 1, move |x, _| {
        let r = periodic_dist2(&grid, x, &c).sqrt();
        rho_bar + amplitude * 0.5 * (1.0 - ((r - radius) / h).tanh())
    });
    let rho = dealias_field(&raw)?;
    let (lo, hi) = (rho.min(), rho.max());
    let (band_lo, band_hi) = (c0, 1.0 / c0);
    if lo < band_lo || hi > band_hi {
        let bad = if lo < band_lo { lo } else { hi };
        return Err(LabError::OutOfBand { rho: bad, lo: band_lo, hi: band_hi });
    }
    let dev = rho.add_scalar(-rho_bar);
    Ok(BumpDensity { l2_deviation: lp_norm(&dev, 2.0)?, sup_deviation: dev.max_abs(), rho })
}

fn mode_sum(grid: Grid, components: usize, modes: &[Mode]) -> Result<Field> {
    if let Some(m) = modes.iter().find(|m| m.component >= components) {
        return Err(LabError::InvalidParameter(format!("mode component {} >= {components}", m.component)));
    }
    let l = grid.box_scale();
    let dim = grid.dim();
    Ok(Field::from_fn(grid, components, |x, c| {
        modes
            .iter()
            .filter(|m| m.component == c)
            .map(|m| {
                let phase: f64 = (0..dim).map(|a| m.k[a] as f64 * x[a] / l).sum();
                m.amplitude * (phase + m.phase).cos()
            })
            .sum()
    }))
}

/// What the generators realized, recorded in reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratedData {
    pub realized_eps: Option<f64>,
    pub velocity_divergence: f64,
    pub bump_l2_deviation: Option<f64>,
    pub bump_sup_deviation: Option<f64>,
}

/// Builds `(ρ₀, u₀)` and validates them as a [`FluidState`].
pub fn initial_state(grid: Grid, params: &FluidParams, data: &InitialData) -> Result<(FluidState, GeneratedData)> {
    let law = &params.pressure;
    let mut info = GeneratedData::default();
    let rho = match &data.density {
        DensityRecipe::Uniform => Field::constant(grid, 1, law.rho_bar),
        DensityRecipe::Bump { amplitude, radius, center } => {
            let b = bump_density(grid, law.rho_bar, law.c0, *amplitude, *radius, *center)?;
            info.bump_l2_deviation = Some(b.l2_deviation);
            info.bump_sup_deviation = Some(b.sup_deviation);
            b.rho
        }
        DensityRecipe::Modes { modes } => {
            let rho = mode_sum(grid, 1, modes)?.add_scalar(law.rho_bar);
            let (lo, hi) = (rho.min(), rho.max());
            if lo < law.c0 || hi > 1.0 / law.c0 {
                let bad = if lo < law.c0 { lo } else { hi };
                return Err(LabError::OutOfBand { rho: bad, lo: law.c0, hi: 1.0 / law.c0 });
            }
            rho
        }
    };
    let u = match &data.velocity {
        VelocityRecipe::Zero => Field::zeros(grid, grid.dim()),
        VelocityRecipe::Oscillating { eps, variant, phi } => {
            info.realized_eps = Some(realized_wavenumber(&grid, *eps)?.1);
            oscillating_velocity(grid, *eps, phi, *variant)?
        }
        VelocityRecipe::Modes { modes } => mode_sum(grid, grid.dim(), modes)?,
    };
    let state = FluidState::new(0.0, rho, u, params.clone())?;
    info.velocity_divergence = divergence(&forward_transform(&state.u)?)?.to_real().max_abs();
    Ok((state, info))
}
