//! Full run: generate, simulate, monitor, write.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{MonitorConfig, ScenarioConfig};
use super::generators::{initial_state, GeneratedData};
use super::report::{hypothesis_report, HypothesisReport};
use crate::cns::{simulate_partial, Trajectory};
use crate::diagnostics::{
    continuation_monitor, density_bound_monitor, diagnostics_records, flux_bound_series, flux_identity_residuals,
    flux_variable, log_density_balance, total_energy, write_diagnostics_csv, ContinuationReport, DensityBoundReport,
    FluxBoundSeries, LogBalanceReport, RunClass,
};
use crate::error::{LabError, Result};

/// Tolerance on `E + ∫D` growth, relative to `E(0)` per unit time.
pub const ENERGY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `max |M(t) − M(0)| / (M(0)·t)`
    pub mass_drift_rate: f64,
    /// Largest growth of `E + ∫D` between snapshots, per unit time, over `E(0)`.
    pub energy_growth_rate: f64,
    pub energy_monotone: bool,
    pub initial_energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxIdentitySummary {
    pub laplace_flux: f64,
    pub vorticity: f64,
    /// `‖(μ+λ)div w − F‖₂/‖F‖₂` on mean-free parts.
    pub flux_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub class: RunClass,
    pub exit_code: i32,
    pub failure: Option<String>,
    pub t_final: f64,
    pub snapshots: usize,
    pub steps: usize,
    pub generated: GeneratedData,
    pub hypothesis: HypothesisReport,
    pub conservation: ConservationReport,
    pub flux_identities: FluxIdentitySummary,
    pub flux_bounds: FluxBoundSeries,
    pub continuation: ContinuationReport,
    pub density: DensityBoundReport,
    /// `(A₁, A₂)` at the last snapshot.
    pub hoff: (f64, f64),
    pub log_balance: Option<LogBalanceReport>,
}

/// Everything a run produced, in memory.
#[derive(Debug)]
pub struct Experiment {
    pub trajectory: Trajectory,
    pub summary: ExperimentSummary,
}

fn conservation(traj: &Trajectory) -> Result<ConservationReport> {
    let vol = traj.grid.volume();
    let mass: Vec<f64> = traj.snapshots.iter().map(|s| s.rho.mean(0) * vol).collect();
    let energy = traj
        .snapshots
        .par_iter()
        .enumerate()
        .map(|(i, s)| Ok(total_energy(&traj.state(i))?.total + s.dissipated))
        .collect::<Result<Vec<f64>>>()?;
    let times = traj.times();
    let t0 = times[0];
    let mass_drift_rate = (1..mass.len())
        .map(|i| (mass[i] - mass[0]).abs() / (mass[0] * (times[i] - t0)))
        .fold(0.0, f64::max);
    let e0 = energy[0];
    let energy_growth_rate = (1..energy.len())
        .map(|i| {
            let growth = (energy[i] - energy[i - 1]) / (times[i] - times[i - 1]);
            if e0 > 0.0 {
                growth / e0
            } else {
                growth
            }
        })
        .fold(0.0, f64::max);
    Ok(ConservationReport { mass_drift_rate, energy_growth_rate, energy_monotone: energy_growth_rate <= ENERGY_TOL, initial_energy: e0 })
}

fn flux_identities(traj: &Trajectory) -> Result<FluxIdentitySummary> {
    let rows = (0..traj.len())
        .into_par_iter()
        .map(|i| {
            let state = traj.state(i);
            let r = flux_identity_residuals(&state)?;
            Ok([r.laplace_flux, r.vorticity, flux_variable(&state)?.flux_mismatch])
        })
        .collect::<Result<Vec<[f64; 3]>>>()?;
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok(FluxIdentitySummary { laplace_flux: max(0), vorticity: max(1), flux_mismatch: max(2) })
}

/// Deterministic low-discrepancy start points for particle paths.
fn path_seeds(traj: &Trajectory, count: usize) -> Vec<[f64; 3]> {
    const STEPS: [f64; 3] = [0.618_033_988_749_894_8, 0.754_877_666_246_692_7, 0.569_840_290_998_053_2];
    let period = std::f64::consts::TAU * traj.grid.box_scale();
    (0..count)
        .map(|k| {
            let mut x = [0.0; 3];
            for a in 0..traj.grid.dim() {
                x[a] = ((k as f64 + 0.5) * STEPS[a]).fract() * period;
            }
            x
        })
        .collect()
}

/// Monitor results for one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAnalysis {
    pub conservation: ConservationReport,
    pub flux_identities: FluxIdentitySummary,
    pub flux_bounds: FluxBoundSeries,
    pub continuation: ContinuationReport,
    pub density: DensityBoundReport,
    /// `(A₁, A₂)` at the last snapshot.
    pub hoff: (f64, f64),
    pub log_balance: Option<LogBalanceReport>,
}

/// Runs every monitor enabled in `m` over a stored trajectory.
pub fn analyze_trajectory(traj: &Trajectory, m: &MonitorConfig) -> Result<TrajectoryAnalysis> {
    let phase = |name: &'static str| move |e: LabError| e.in_phase(name);
    let conservation = conservation(traj).map_err(phase("conservation"))?;
    let flux_identities = flux_identities(traj).map_err(phase("flux identities"))?;
    let flux_bounds = flux_bound_series(traj, m.flux_p).map_err(phase("flux bounds"))?;
    let continuation = continuation_monitor(traj, m.q, &m.thresholds).map_err(phase("continuation"))?;
    let density = density_bound_monitor(traj, traj.params.pressure.c0).map_err(phase("density bounds"))?;
    let records = diagnostics_records(traj, m.q).map_err(phase("diagnostics"))?;
    let hoff = records.last().map_or((0.0, 0.0), |r| (r.a1, r.a2));
    let log_balance = if m.log_balance_paths > 0 && traj.len() >= 3 {
        Some(log_density_balance(traj, &path_seeds(traj, m.log_balance_paths), 4).map_err(phase("log-density balance"))?)
    } else {
        None
    };
    Ok(TrajectoryAnalysis { conservation, flux_identities, flux_bounds, continuation, density, hoff, log_balance })
}

/// Runs `config` without touching the filesystem.
pub fn run_in_memory(config: &ScenarioConfig) -> Result<Experiment> {
    config.validate()?;
    let grid = config.grid()?;
    let (initial, generated) = initial_state(grid, &config.fluid, &config.initial).map_err(|e| e.in_phase("generate"))?;
    let hypothesis = hypothesis_report(&config.indices, config.fluid.pressure.rho_bar, &initial.rho, &initial.u)
        .map_err(|e| e.in_phase("hypothesis report"))?;
    let end = simulate_partial(&initial, config.t_end, config.cadence, &mut |_| Ok(())).map_err(|e| e.in_phase("simulate"))?;
    let mut trajectory = end.trajectory;
    trajectory.config = serde_json::to_value(config)?;
    let a = analyze_trajectory(&trajectory, &config.monitors)?;
    let class = RunClass::classify(a.continuation.alarm.is_some(), end.failure.as_ref());
    let last = trajectory.snapshots.last().expect("trajectory holds the initial snapshot");
    let summary = ExperimentSummary {
        name: config.name.clone(),
        class,
        exit_code: class.exit_code(),
        failure: end.failure.map(|e| e.to_string()),
        t_final: last.t,
        snapshots: trajectory.len(),
        steps: last.step,
        generated,
        hypothesis,
        conservation: a.conservation,
        flux_identities: a.flux_identities,
        flux_bounds: a.flux_bounds,
        continuation: a.continuation,
        density: a.density,
        hoff: a.hoff,
        log_balance: a.log_balance,
    };
    Ok(Experiment { trajectory, summary })
}

/// Runs `config` and writes the trajectory, `diagnostics.csv` and
/// `summary.json` under `out_dir`.
pub fn run_experiment(config: &ScenarioConfig, out_dir: &Path) -> Result<ExperimentSummary> {
    let exp = run_in_memory(config)?;
    let write = |exp: &Experiment| -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        if config.monitors.write_snapshots {
            exp.trajectory.write_dir(out_dir)?;
        } else {
            std::fs::write(out_dir.join("scenario.json"), serde_json::to_string_pretty(config)?)?;
        }
        let records = diagnostics_records(&exp.trajectory, config.monitors.q)?;
        write_diagnostics_csv(&out_dir.join("diagnostics.csv"), &records)?;
        std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&exp.summary)?)?;
        Ok(())
    };
    write(&exp).map_err(|e| e.in_phase("write"))?;
    Ok(exp.summary)
}
