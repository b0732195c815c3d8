//! Energy budget, material derivative and the Hoff functionals.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flux::effective_viscous_flux;
use crate::cns::{FluidState, PressureLaw, Trajectory};
use crate::error::{LabError, Result};
use crate::spectral::{dealias, forward_transform, gradient, jacobian, lp_norm, ordered_sum, RealField, SpectralField};

type Field = RealField<f64>;

/// `σ(t) = min(1, t)`, clamped at zero for negative times.
pub fn sigma(t: f64) -> f64 {
    t.clamp(0.0, 1.0)
}

/// `G(ρ)` for a density inside the admissible band.
pub fn potential_density(rho: f64, law: &PressureLaw) -> Result<f64> {
    law.check_band(rho)?;
    Ok(law.potential(rho))
}

/// Smallest `C` with `(P(ρ) − P(ρ̄))² ≤ C·G(ρ)` on `samples` band points.
pub fn potential_bound_constant(law: &PressureLaw, samples: usize) -> Result<f64> {
    if samples < 2 {
        return Err(LabError::TooFewSamples(format!("{samples} band points")));
    }
    let (lo, hi) = law.band();
    let pb = law.p_bar();
    let mut c: f64 = 0.0;
    for i in 0..samples {
        let rho = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let g = (law.pressure(rho) - pb).powi(2);
        let pot = law.potential(rho);
        if pot > 1e-14 {
            c = c.max(g / pot);
        } else if g > 1e-14 {
            return Err(LabError::Degenerate(format!("G({rho}) = {pot} with g = {g}")));
        }
    }
    Ok(c)
}

/// Energy split at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    /// `∫ ½ρ|u|²`
    pub kinetic: f64,
    /// `∫ G(ρ)`
    pub potential: f64,
    pub total: f64,
    /// `μ‖∇u‖₂² + λ‖div u‖₂²`, the rate at which `total` decays.
    pub dissipation: f64,
    /// `‖∇u‖₂²`
    pub grad_u_sq: f64,
}

pub fn total_energy(state: &FluidState) -> Result<EnergyBudget> {
    let grid = state.grid();
    let (n, dim) = (grid.len(), grid.dim());
    let cell = grid.cell_volume();
    let (rho, u) = (state.rho.values(), state.u.values());
    let kinetic = 0.5 * cell * ordered_sum(n, |i| rho[i] * (0..dim).map(|c| u[c * n + i] * u[c * n + i]).sum::<f64>());
    let law = &state.params.pressure;
    let potential = cell * ordered_sum(n, |i| law.potential(rho[i]));
    let grad = jacobian(&forward_transform(&state.u)?)?.l2_norm();
    Ok(EnergyBudget {
        kinetic,
        potential,
        total: kinetic + potential,
        dissipation: state.dissipation()?,
        grad_u_sq: grad * grad,
    })
}

/// `ρu̇ = μΔu + λ∇div u − ∇P(ρ)`, with `P(ρ)` dealiased as in the solver.
pub fn momentum_forcing(state: &FluidState) -> Result<SpectralField<f64>> {
    let p_hat = dealias(&forward_transform(&state.pressure_field())?);
    state.lame()?.sub(&gradient(&p_hat)?)
}

/// `u̇ = u_t + u·∇u`, read off the momentum balance.
pub fn material_derivative(state: &FluidState) -> Result<Field> {
    let min_rho = state.rho.min();
    if min_rho < crate::cns::VACUUM_GUARD {
        return Err(LabError::VacuumGuard { t: state.t, min_rho });
    }
    let force = momentum_forcing(state)?.to_real();
    force.mul(&state.rho.map(|r| 1.0 / r))
}

/// Per-snapshot quantities behind the Hoff functionals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HoffIntegrands {
    pub grad_u_sq: f64,
    /// `‖√ρ u̇‖₂²`
    pub rho_udot_sq: f64,
    /// `‖∇u̇‖₂²`
    pub grad_udot_sq: f64,
}

pub fn hoff_integrands(state: &FluidState) -> Result<HoffIntegrands> {
    let grid = state.grid();
    let (n, dim) = (grid.len(), grid.dim());
    let udot = material_derivative(state)?;
    let (rho, ud) = (state.rho.values(), udot.values());
    let rho_udot_sq = grid.cell_volume() * ordered_sum(n, |i| rho[i] * (0..dim).map(|c| ud[c * n + i] * ud[c * n + i]).sum::<f64>());
    let grad_udot = jacobian(&forward_transform(&udot)?)?.l2_norm();
    let grad_u = jacobian(&forward_transform(&state.u)?)?.l2_norm();
    Ok(HoffIntegrands { grad_u_sq: grad_u * grad_u, rho_udot_sq, grad_udot_sq: grad_udot * grad_udot })
}

/// Running `(A₁, A₂)` at every sample: suprema over the prefix plus trapezoid integrals.
pub fn hoff_running(times: &[f64], rows: &[HoffIntegrands]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(rows.len());
    let (mut sup1, mut sup2, mut int1, mut int2) = (0.0_f64, 0.0_f64, 0.0, 0.0);
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            let h = times[i] - times[i - 1];
            let prev = &rows[i - 1];
            int1 += 0.5 * h * (row.rho_udot_sq + prev.rho_udot_sq);
            int2 += 0.5 * h * (sigma(times[i]) * row.grad_udot_sq + sigma(times[i - 1]) * prev.grad_udot_sq);
        }
        sup1 = sup1.max(row.grad_u_sq);
        sup2 = sup2.max(sigma(times[i]) * row.rho_udot_sq);
        out.push((sup1 + int1, sup2 + int2));
    }
    out
}

/// `(A₁(T), A₂(T))` over a stored trajectory.
pub fn hoff_functionals(traj: &Trajectory) -> Result<(f64, f64)> {
    if traj.len() < 2 {
        return Err(LabError::TooFewSamples(format!("{} snapshot(s), need 2", traj.len())));
    }
    let rows = (0..traj.len())
        .into_par_iter()
        .map(|i| hoff_integrands(&traj.state(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(*hoff_running(&traj.times(), &rows).last().unwrap())
}

/// Bit-exact header of `diagnostics.csv`.
pub const DIAGNOSTICS_HEADER: &str =
    "t,E,G_int,grad_u_sq,rho_udot_sq,grad_udot_sq,A1,A2,rho_min,rho_max,F_L2,F_L4,F_L6,omega_L2,cont_q,sigma";

/// One row of `diagnostics.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub total_energy: f64,
    pub potential_energy: f64,
    pub grad_u_sq: f64,
    pub rho_udot_sq: f64,
    pub grad_udot_sq: f64,
    pub a1: f64,
    pub a2: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `‖F‖_p` for `p = 2, 4, 6`.
    pub flux_lp: [f64; 3],
    /// `‖ω‖_p` for `p = 2, 4, 6`.
    pub omega_lp: [f64; 3],
    /// `‖ρ‖_∞ + ‖u‖_q`
    pub continuation: f64,
    pub sigma: f64,
    /// `∫₀ᵗ (μ‖∇u‖² + λ‖div u‖²)` as accumulated by the solver.
    pub dissipated: f64,
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let vals = [
            self.t,
            self.total_energy,
            self.potential_energy,
            self.grad_u_sq,
            self.rho_udot_sq,
            self.grad_udot_sq,
            self.a1,
            self.a2,
            self.rho_min,
            self.rho_max,
            self.flux_lp[0],
            self.flux_lp[1],
            self.flux_lp[2],
            self.omega_lp[0],
            self.continuation,
            self.sigma,
        ];
        vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }
}

const FLUX_EXPONENTS: [f64; 3] = [2.0, 4.0, 6.0];

/// One record per snapshot; `q > 3` sets the continuation norm.
pub fn diagnostics_records(traj: &Trajectory, q: f64) -> Result<Vec<DiagnosticsRecord>> {
    if !(q > 3.0) {
        return Err(LabError::InvalidExponent(format!("continuation needs q > 3, got {q}")));
    }
    let partial = (0..traj.len())
        .into_par_iter()
        .map(|i| {
            let state = traj.state(i);
            let energy = total_energy(&state)?;
            let hoff = hoff_integrands(&state)?;
            let (f, omega) = effective_viscous_flux(&state)?;
            let mut flux_lp = [0.0; 3];
            let mut omega_lp = [0.0; 3];
            for (k, &p) in FLUX_EXPONENTS.iter().enumerate() {
                flux_lp[k] = lp_norm(&f, p)?;
                omega_lp[k] = lp_norm(&omega, p)?;
            }
            let record = DiagnosticsRecord {
                t: state.t,
                total_energy: energy.total,
                potential_energy: energy.potential,
                grad_u_sq: hoff.grad_u_sq,
                rho_udot_sq: hoff.rho_udot_sq,
                grad_udot_sq: hoff.grad_udot_sq,
                a1: 0.0,
                a2: 0.0,
                rho_min: state.rho.min(),
                rho_max: state.rho.max(),
                flux_lp,
                omega_lp,
                continuation: state.rho.max_abs() + lp_norm(&state.u, q)?,
                sigma: sigma(state.t),
                dissipated: traj.snapshots[i].dissipated,
            };
            Ok((record, hoff))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<HoffIntegrands> = partial.iter().map(|(_, h)| *h).collect();
    let running = hoff_running(&traj.times(), &rows);
    Ok(partial
        .into_iter()
        .zip(running)
        .map(|((mut rec, _), (a1, a2))| {
            rec.a1 = a1;
            rec.a2 = a2;
            rec
        })
        .collect())
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cns::{simulate, step, FluidParams};
    use crate::spectral::Grid;

    fn params(gamma: f64) -> FluidParams {
        FluidParams::new(0.05, 0.02, PressureLaw::power(1.0, gamma, 1.0, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(0.5), 0.5);
        assert_eq!(sigma(2.0), 1.0);
        assert_eq!(sigma(0.0), 0.0);
    }

    #[test]
    fn potential_examples() {
        let law = PressureLaw::power(1.0, 2.0, 1.0, 0.5).unwrap();
        assert_eq!(potential_density(1.0, &law).unwrap(), 0.0);
        assert!((potential_density(1.7, &law).unwrap() - 0.49).abs() < 1e-14);
        assert!(potential_density(5.0, &law).is_err());
        let law = PressureLaw::power(1.0, 1.4, 1.0, 0.5).unwrap();
        for i in 0..1000 {
            let rho = 4.0 * i as f64 / 999.0;
            assert!(potential_density(rho, &law).unwrap() >= -1e-15);
        }
        let c = potential_bound_constant(&law, 1001).unwrap();
        assert!(c.is_finite() && c > 0.0);
    }

    #[test]
    fn equilibrium_budget_is_zero() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let s = FluidState::equilibrium(grid, params(1.4)).unwrap();
        let e = total_energy(&s).unwrap();
        assert_eq!((e.total, e.dissipation), (0.0, 0.0));
        assert!(material_derivative(&s).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn single_mode_kinetic_energy() {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let a = 0.3;
        let u = RealField::from_fn(grid, 3, move |x, c| if c == 1 { a * x[0].sin() } else { 0.0 });
        let s = FluidState::new(0.0, Field::constant(grid, 1, 1.0), u, params(1.4)).unwrap();
        let e = total_energy(&s).unwrap();
        let expect = a * a * grid.volume() / 4.0;
        assert!((e.kinetic - expect).abs() < 1e-12 * expect);
        assert!((e.grad_u_sq - 2.0 * expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn material_derivative_matches_finite_difference() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let rho = Field::from_fn(grid, 1, |x, _| 1.0 + 0.05 * x[0].cos());
        let u = Field::from_fn(grid, 2, |x, c| if c == 0 { 0.1 * x[1].sin() } else { 0.05 * x[0].cos() });
        let s = FluidState::new(0.0, rho, u, params(1.4)).unwrap();
        let udot = dealias_field(&material_derivative(&s).unwrap());
        let adv = advective(&s);
        let mut errs = Vec::new();
        for dt in [1e-3, 5e-4] {
            let next = step(&s, dt).unwrap();
            let fd = next.u.sub(&s.u).unwrap().scale(1.0 / dt).add(&adv).unwrap();
            errs.push(fd.sub(&udot).unwrap().max_abs());
        }
        assert!(errs[0] < 1e-3 && (errs[0] / errs[1] - 2.0).abs() < 0.2, "{errs:?}");
    }

    fn dealias_field(f: &Field) -> Field {
        crate::spectral::dealias_field(f).unwrap()
    }

    /// `u·∇u`
    fn advective(s: &FluidState) -> Field {
        let dim = s.grid().dim();
        let jac = jacobian(&forward_transform(&s.u).unwrap()).unwrap().to_real();
        let parts: Vec<Field> = (0..dim)
            .map(|c| {
                let mut acc = Field::zeros(*s.grid(), 1);
                for a in 0..dim {
                    acc = acc.add(&s.u.extract(a).mul(&jac.extract(c * dim + a)).unwrap()).unwrap();
                }
                acc
            })
            .collect();
        Field::stack(&parts).unwrap()
    }

    #[test]
    fn hoff_functionals_behave() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let eq = FluidState::equilibrium(grid, params(1.4)).unwrap();
        let traj = simulate(&eq, 0.2, 0.1).unwrap();
        let (a1, a2) = hoff_functionals(&traj).unwrap();
        assert!(a1 < 1e-20 && a2 < 1e-20);
        let single = Trajectory::new(&eq);
        assert!(matches!(hoff_functionals(&single), Err(LabError::TooFewSamples(_))));
        let rows = [HoffIntegrands { grad_u_sq: 2.5, rho_udot_sq: 0.0, grad_udot_sq: 0.0 }];
        assert_eq!(hoff_running(&[0.0], &rows)[0].0, 2.5);
    }

    #[test]
    fn csv_header_and_rows() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let u = Field::from_fn(grid, 2, |x, c| if c == 0 { 0.01 * x[1].sin() } else { 0.0 });
        let s = FluidState::new(0.0, Field::constant(grid, 1, 1.0), u, params(1.4)).unwrap();
        let traj = simulate(&s, 0.2, 0.1).unwrap();
        let recs = diagnostics_records(&traj, 4.0).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.windows(2).all(|w| w[1].a1 >= w[0].a1 - 1e-15 && w[1].a2 >= w[0].a2));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diagnostics.csv");
        write_diagnostics_csv(&path, &recs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), DIAGNOSTICS_HEADER);
        assert_eq!(lines.next().unwrap().split(',').count(), 16);
        assert!(diagnostics_records(&traj, 3.0).is_err());
    }
}
