//! Fluid state, right-hand side, RK4 stepping and the simulation loop.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pressure::PressureLaw;
use crate::besov::BlockNormTrajectory;
use crate::error::{LabError, Result};
use crate::io::{read_snapshot, write_snapshot};
use crate::littlewood_paley::DyadicPartition;
use crate::spectral::{
    dealias, divergence, forward_transform, gradient, jacobian, laplacian, Grid, GridSpec, RealField, SpectralField,
};

/// Densities below this end a run.
pub const VACUUM_GUARD: f64 = 1e-8;
/// Default CFL safety factor.
pub const CFL_SAFETY: f64 = 0.4;

type Field = RealField<f64>;

/// Viscosities, pressure law and stepping safety factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub mu: f64,
    pub lambda: f64,
    pub pressure: PressureLaw,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
}

fn default_safety() -> f64 {
    CFL_SAFETY
}

impl FluidParams {
    pub fn new(mu: f64, lambda: f64, pressure: PressureLaw) -> Result<Self> {
        let p = FluidParams { mu, lambda, pressure, cfl_safety: CFL_SAFETY };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.lambda + self.mu > 0.0) {
            return Err(LabError::Ellipticity(format!("mu = {}, lambda = {}", self.mu, self.lambda)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(LabError::InvalidParameter(format!("cfl_safety = {}", self.cfl_safety)));
        }
        self.pressure.validate()
    }

    /// `(μ + λ)/ρ̄`, the damping coefficient of longitudinal modes.
    pub fn longitudinal_diffusivity(&self) -> f64 {
        (self.mu + self.lambda) / self.pressure.rho_bar
    }
}

/// Density and velocity at one time.
#[derive(Clone, Debug)]
pub struct FluidState {
    pub t: f64,
    pub rho: Field,
    pub u: Field,
    pub params: FluidParams,
}

fn project(f: &Field) -> Result<Field> {
    Ok(dealias(&forward_transform(f)?).to_real())
}

impl FluidState {
    /// Dealiases the inputs and checks the invariants.
    pub fn new(t: f64, rho: Field, u: Field, params: FluidParams) -> Result<Self> {
        params.validate()?;
        if rho.components() != 1 {
            return Err(LabError::ComponentMismatch { expected: 1, found: rho.components() });
        }
        if u.components() != rho.grid().dim() {
            return Err(LabError::ComponentMismatch { expected: rho.grid().dim(), found: u.components() });
        }
        if rho.grid() != u.grid() {
            return Err(LabError::GridMismatch);
        }
        let state = FluidState { t, rho: project(&rho)?, u: project(&u)?, params };
        state.check()?;
        Ok(state)
    }

    /// `ρ ≡ ρ̄`, `u ≡ 0`.
    pub fn equilibrium(grid: Grid, params: FluidParams) -> Result<Self> {
        let rho = Field::constant(grid, 1, params.pressure.rho_bar);
        let u = Field::zeros(grid, grid.dim());
        Self::new(0.0, rho, u, params)
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    fn check(&self) -> Result<()> {
        if !self.rho.is_finite() || !self.u.is_finite() {
            return Err(LabError::NonFiniteState { t: self.t });
        }
        let min_rho = self.rho.min();
        if min_rho < VACUUM_GUARD {
            return Err(LabError::VacuumGuard { t: self.t, min_rho });
        }
        Ok(())
    }

    /// `P(ρ)` sampled on the grid.
    pub fn pressure_field(&self) -> Field {
        let law = &self.params.pressure;
        self.rho.map(|r| law.pressure(r))
    }

    /// `μΔu + λ∇div u`, spectral.
    pub fn lame(&self) -> Result<SpectralField<f64>> {
        lame_operator(&forward_transform(&self.u)?, self.params.mu, self.params.lambda)
    }

    /// `μ‖∇u‖₂² + λ‖div u‖₂²`, the energy dissipation rate.
    pub fn dissipation(&self) -> Result<f64> {
        let spec = forward_transform(&self.u)?;
        let grad = jacobian(&spec)?.l2_norm();
        let div = divergence(&spec)?.l2_norm();
        Ok(self.params.mu * grad * grad + self.params.lambda * div * div)
    }

    fn with_fields(&self, t: f64, rho: Field, u: Field) -> FluidState {
        FluidState { t, rho, u, params: self.params.clone() }
    }
}

/// `μΔu + λ∇div u` applied to a velocity spectrum.
pub fn lame_operator(u: &SpectralField<f64>, mu: f64, lambda: f64) -> Result<SpectralField<f64>> {
    laplacian(u).scale(mu).axpy(lambda, &gradient(&divergence(u)?)?)
}

/// `(∂_t ρ, ∂_t u)` with every product dealiased.
pub fn rhs(state: &FluidState) -> Result<(Field, Field)> {
    state.check()?;
    let dim = state.grid().dim();
    let (rho, u) = (&state.rho, &state.u);
    let u_hat = forward_transform(u)?;

    let flux = forward_transform(&rho.mul(u)?)?;
    let drho = dealias(&divergence(&flux)?).to_real().scale(-1.0);

    let jac = jacobian(&u_hat)?.to_real();
    let n = state.grid().len();
    let mut adv = Field::zeros(*state.grid(), dim);
    adv.values_mut().par_chunks_mut(n).enumerate().for_each(|(c, out)| {
        for a in 0..dim {
            let ua = u.component(a);
            let d = jac.component(c * dim + a);
            out.iter_mut().zip(ua.iter().zip(d)).for_each(|(o, (&x, &y))| *o += x * y);
        }
    });

    let p_hat = dealias(&forward_transform(&state.pressure_field())?);
    let force = state.lame()?.sub(&gradient(&p_hat)?)?.to_real();
    let inv_rho = rho.map(|r| 1.0 / r);
    let accel = force.mul(&inv_rho)?.sub(&adv)?;
    Ok((drho, project(&accel)?))
}

/// Largest stable step: `safety · min(dx/(max|u| + c_s(ρ_max)), dx² ρ_min/(2(2μ+λ)))`.
pub fn cfl_dt(state: &FluidState) -> f64 {
    let p = &state.params;
    let dx = state.grid().spacing();
    let umax = state.u.magnitude().max_abs();
    let cs = p.pressure.sound_speed(state.rho.max());
    let advective = dx / (umax + cs);
    let viscous = dx * dx * state.rho.min() / (2.0 * (2.0 * p.mu + p.lambda));
    p.cfl_safety * advective.min(viscous)
}

struct Stage {
    drho: Field,
    du: Field,
    dissipation: f64,
}

fn stage(state: &FluidState) -> Result<Stage> {
    let (drho, du) = rhs(state)?;
    Ok(Stage { drho, du, dissipation: state.dissipation()? })
}

fn shifted(state: &FluidState, k: &Stage, h: f64) -> Result<FluidState> {
    Ok(state.with_fields(state.t + h, state.rho.axpy(h, &k.drho)?, state.u.axpy(h, &k.du)?))
}

/// One classical RK4 step; also returns `∫ D dt` over the step.
pub fn step_with_dissipation(state: &FluidState, dt: f64) -> Result<(FluidState, f64)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LabError::InvalidParameter(format!("dt = {dt}")));
    }
    let k1 = stage(state)?;
    let k2 = stage(&shifted(state, &k1, 0.5 * dt)?)?;
    let k3 = stage(&shifted(state, &k2, 0.5 * dt)?)?;
    let k4 = stage(&shifted(state, &k3, dt)?)?;
    let combine = |a: &Field, f: fn(&Stage) -> &Field| -> Result<Field> {
        a.axpy(dt / 6.0, f(&k1))?
            .axpy(dt / 3.0, f(&k2))?
            .axpy(dt / 3.0, f(&k3))?
            .axpy(dt / 6.0, f(&k4))
    };
    let rho = project(&combine(&state.rho, |k| &k.drho)?)?;
    let u = project(&combine(&state.u, |k| &k.du)?)?;
    let next = state.with_fields(state.t + dt, rho, u);
    if !next.rho.is_finite() || !next.u.is_finite() {
        return Err(LabError::NonFiniteState { t: next.t });
    }
    next.check()?;
    let q = dt / 6.0 * (k1.dissipation + 2.0 * k2.dissipation + 2.0 * k3.dissipation + k4.dissipation);
    Ok((next, q))
}

pub fn step(state: &FluidState, dt: f64) -> Result<FluidState> {
    Ok(step_with_dissipation(state, dt)?.0)
}

/// Steps through a prescribed sequence of time steps.
pub fn advance(state: &FluidState, dts: &[f64]) -> Result<FluidState> {
    let mut s = state.clone();
    for &dt in dts {
        s = step(&s, dt)?;
    }
    Ok(s)
}

/// One stored snapshot.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub rho: Field,
    pub u: Field,
    /// `∫₀ᵗ D` accumulated up to this snapshot.
    pub dissipated: f64,
    /// Number of steps taken before this snapshot.
    pub step: usize,
}

/// Snapshots of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Grid,
    pub params: FluidParams,
    pub snapshots: Vec<Snapshot>,
    pub dt_history: Vec<f64>,
    /// Provenance of the run, stored verbatim in `config.json`.
    pub config: serde_json::Value,
}

impl Trajectory {
    pub fn new(initial: &FluidState) -> Self {
        Trajectory {
            grid: *initial.grid(),
            params: initial.params.clone(),
            snapshots: vec![Snapshot { t: initial.t, rho: initial.rho.clone(), u: initial.u.clone(), dissipated: 0.0, step: 0 }],
            dt_history: Vec::new(),
            config: serde_json::Value::Null,
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn state(&self, i: usize) -> FluidState {
        let s = &self.snapshots[i];
        FluidState { t: s.t, rho: s.rho.clone(), u: s.u.clone(), params: self.params.clone() }
    }

    pub fn last_state(&self) -> FluidState {
        self.state(self.len() - 1)
    }

    /// Appends a snapshot; times must increase and grids agree.
    pub fn push(&mut self, snap: Snapshot) -> Result<()> {
        if snap.rho.grid() != &self.grid || snap.u.grid() != &self.grid {
            return Err(LabError::GridMismatch);
        }
        if let Some(last) = self.snapshots.last() {
            if !(snap.t > last.t) {
                return Err(LabError::InvalidParameter(format!("snapshot time {} not after {}", snap.t, last.t)));
            }
        }
        self.snapshots.push(snap);
        Ok(())
    }

    /// Block norms of one velocity component (or of `ρ − ρ̄` for `None`) at every snapshot.
    pub fn block_norms(&self, component: Option<usize>, p: f64, partition: &DyadicPartition<f64>) -> Result<BlockNormTrajectory> {
        let fields: Vec<Field> = self
            .snapshots
            .iter()
            .map(|s| match component {
                Some(c) => s.u.extract(c),
                None => s.rho.add_scalar(-self.params.pressure.rho_bar),
            })
            .collect();
        BlockNormTrajectory::from_fields(&self.times(), &fields, p, partition)
    }

    /// Writes `config.json` and `snapshots/NNNN.{bin,json}` under `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let snaps = dir.join("snapshots");
        // stale snapshots from an earlier, longer run would survive otherwise
        if snaps.is_dir() {
            fs::remove_dir_all(&snaps)?;
        }
        fs::create_dir_all(&snaps)?;
        let meta = TrajectoryMeta {
            grid: self.grid.into(),
            params: self.params.clone(),
            times: self.times(),
            dissipated: self.snapshots.iter().map(|s| s.dissipated).collect(),
            steps: self.snapshots.iter().map(|s| s.step).collect(),
            dt_history: self.dt_history.clone(),
            config: self.config.clone(),
        };
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&meta)?)?;
        for (i, s) in self.snapshots.iter().enumerate() {
            let stacked = Field::stack(&[s.rho.clone(), s.u.clone()])?;
            write_snapshot(&snaps.join(format!("{i:04}")), &stacked, s.t)?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta: TrajectoryMeta = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
        let grid = Grid::try_from(meta.grid)?;
        let mut snapshots = Vec::with_capacity(meta.times.len());
        for (i, (&dissipated, &step)) in meta.dissipated.iter().zip(&meta.steps).enumerate() {
            let (stacked, t) = read_snapshot(&dir.join("snapshots").join(format!("{i:04}")))?;
            if stacked.grid() != &grid || stacked.components() != grid.dim() + 1 {
                return Err(LabError::GridMismatch);
            }
            let rho = stacked.extract(0);
            let u = Field::stack(&(1..=grid.dim()).map(|c| stacked.extract(c)).collect::<Vec<_>>())?;
            snapshots.push(Snapshot { t, rho, u, dissipated, step });
        }
        Ok(Trajectory { grid, params: meta.params, snapshots, dt_history: meta.dt_history, config: meta.config })
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryMeta {
    grid: GridSpec,
    params: FluidParams,
    times: Vec<f64>,
    dissipated: Vec<f64>,
    steps: Vec<usize>,
    dt_history: Vec<f64>,
    config: serde_json::Value,
}

/// How a run ended.
#[derive(Debug)]
pub struct RunEnd {
    pub trajectory: Trajectory,
    /// The step error that stopped the run early, if any.
    pub failure: Option<LabError>,
}

/// Runs to `t_end` with `dt = cfl_dt`, snapshotting every `cadence`; keeps
/// the partial trajectory when a step fails. `hook` sees every snapshot.
pub fn simulate_partial(
    initial: &FluidState,
    t_end: f64,
    cadence: f64,
    hook: &mut dyn FnMut(&Snapshot) -> Result<()>,
) -> Result<RunEnd> {
    if !(t_end >= initial.t) || !(cadence > 0.0) {
        return Err(LabError::InvalidParameter(format!("t_end = {t_end}, cadence = {cadence}")));
    }
    initial.check()?;
    let mut traj = Trajectory::new(initial);
    hook(&traj.snapshots[0])?;
    let mut state = initial.clone();
    let mut dissipated = 0.0;
    let mut k = 1u64;
    let t0 = initial.t;
    while state.t < t_end {
        let target = (t0 + k as f64 * cadence).min(t_end);
        let remaining = target - state.t;
        let bound = cfl_dt(&state);
        // avoid a sliver step just before a snapshot
        let dt = if bound >= remaining * (1.0 - 1e-12) {
            remaining
        } else if bound >= 0.5 * remaining {
            0.5 * remaining
        } else {
            bound
        };
        let hit = dt == remaining;
        match step_with_dissipation(&state, dt) {
            Ok((mut next, q)) => {
                dissipated += q;
                traj.dt_history.push(dt);
                if hit {
                    next.t = target;
                    k += 1;
                    let snap = Snapshot {
                        t: next.t,
                        rho: next.rho.clone(),
                        u: next.u.clone(),
                        dissipated,
                        step: traj.dt_history.len(),
                    };
                    hook(&snap)?;
                    traj.push(snap)?;
                }
                state = next;
            }
            Err(e) => {
                let e = match e {
                    e @ (LabError::VacuumGuard { .. } | LabError::NonFiniteState { .. }) => e,
                    other => other.in_phase(format!("step at t = {}", state.t)),
                };
                return Ok(RunEnd { trajectory: traj, failure: Some(e) });
            }
        }
    }
    Ok(RunEnd { trajectory: traj, failure: None })
}

/// [`simulate_partial`] without hooks, failing on the first step error.
pub fn simulate(initial: &FluidState, t_end: f64, cadence: f64) -> Result<Trajectory> {
    let end = simulate_partial(initial, t_end, cadence, &mut |_| Ok(()))?;
    match end.failure {
        Some(e) => Err(e),
        None => Ok(end.trajectory),
    }
}
