//! Run monitors: continuation quantity, density bands and the log-density balance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cns::{trace_characteristics, Trajectory};
use crate::error::{LabError, Result};
use crate::spectral::{divergence, forward_transform, lp_norm, SpectralField};

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunClass {
    Completed,
    Alarm,
    VacuumGuard,
}

impl RunClass {
    pub fn exit_code(self) -> i32 {
        match self {
            RunClass::Completed => 0,
            RunClass::Alarm => 2,
            RunClass::VacuumGuard => 3,
        }
    }

    /// Combines the monitor verdict with the solver's failure, if any.
    pub fn classify(alarm: bool, failure: Option<&LabError>) -> RunClass {
        match failure.map(LabError::root) {
            Some(LabError::VacuumGuard { .. }) => RunClass::VacuumGuard,
            Some(_) => RunClass::Alarm,
            None if alarm => RunClass::Alarm,
            None => RunClass::Completed,
        }
    }
}

/// Alarm triggers for `‖ρ‖_∞ + ‖u‖_q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationThresholds {
    pub value: Option<f64>,
    /// Largest admissible growth rate over the trailing window.
    pub slope: Option<f64>,
    /// Snapshots in the trailing window, at least 2.
    pub window: usize,
}

impl Default for ContinuationThresholds {
    fn default() -> Self {
        ContinuationThresholds { value: None, slope: None, window: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmKind {
    Threshold,
    Slope,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    pub t: f64,
    pub kind: AlarmKind,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub q: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// First alarm raised, if any.
    pub alarm: Option<Alarm>,
    pub class: RunClass,
}

pub fn continuation_monitor(traj: &Trajectory, q: f64, thresholds: &ContinuationThresholds) -> Result<ContinuationReport> {
    if !(q > 3.0) {
        return Err(LabError::InvalidExponent(format!("continuation needs q > 3, got {q}")));
    }
    if thresholds.window < 2 {
        return Err(LabError::InvalidParameter(format!("window = {} below 2", thresholds.window)));
    }
    let times = traj.times();
    let values = traj
        .snapshots
        .par_iter()
        .map(|s| Ok(s.rho.max_abs() + lp_norm(&s.u, q)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut alarm = None;
    for (i, &v) in values.iter().enumerate() {
        if let Some(limit) = thresholds.value {
            if v > limit {
                alarm = Some(Alarm { t: times[i], kind: AlarmKind::Threshold, value: v });
                break;
            }
        }
        if let (Some(limit), true) = (thresholds.slope, i + 1 >= thresholds.window) {
            let k = i + 1 - thresholds.window;
            let rate = (v - values[k]) / (times[i] - times[k]);
            if rate > limit {
                alarm = Some(Alarm { t: times[i], kind: AlarmKind::Slope, value: rate });
                break;
            }
        }
    }
    let class = RunClass::classify(alarm.is_some(), None);
    Ok(ContinuationReport { q, times, values, alarm, class })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityBoundReport {
    pub c0: f64,
    pub times: Vec<f64>,
    pub rho_min: Vec<f64>,
    pub rho_max: Vec<f64>,
    /// First time `ρ` leaves `[c₀/2, 2/c₀]`.
    pub outer_violation: Option<f64>,
    /// First time `ρ` leaves `(¾c₀, 3/(2c₀))`.
    pub inner_violation: Option<f64>,
}

pub fn density_bound_monitor(traj: &Trajectory, c0: f64) -> Result<DensityBoundReport> {
    if !(c0 > 0.0 && c0 < 1.0) {
        return Err(LabError::InvalidParameter(format!("c0 = {c0} outside (0, 1)")));
    }
    let times = traj.times();
    let rho_min: Vec<f64> = traj.snapshots.iter().map(|s| s.rho.min()).collect();
    let rho_max: Vec<f64> = traj.snapshots.iter().map(|s| s.rho.max()).collect();
    let first = |ok: &dyn Fn(f64, f64) -> bool| (0..times.len()).find(|&i| !ok(rho_min[i], rho_max[i])).map(|i| times[i]);
    let outer_violation = first(&|lo, hi| lo >= 0.5 * c0 && hi <= 2.0 / c0);
    let inner_violation = first(&|lo, hi| lo > 0.75 * c0 && hi < 1.5 / c0);
    Ok(DensityBoundReport { c0, times, rho_min, rho_max, outer_violation, inner_violation })
}

/// Residual of `ν·L̇ + (P − P̄) + F = 0` along particle paths for one `ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub label: String,
    pub nu: f64,
    pub max_residual: f64,
    /// `max_residual` over the largest `|F| + |P − P̄| + ν|L̇|` seen on the paths.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBalanceReport {
    pub paths: usize,
    pub samples: usize,
    pub rows: Vec<BalanceRow>,
}

impl LogBalanceReport {
    pub fn row(&self, label: &str) -> Option<&BalanceRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Second-order derivative of samples on a nonuniform grid.
fn derivative(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let (a, b, c) = match i {
                0 => (0, 1, 2),
                _ if i == n - 1 => (n - 3, n - 2, n - 1),
                _ => (i - 1, i, i + 1),
            };
            let (h1, h2) = (t[b] - t[a], t[c] - t[b]);
            // derivative of the quadratic through (a, b, c) evaluated at t[i]
            let x = t[i];
            let da = (2.0 * x - t[b] - t[c]) / (h1 * (h1 + h2));
            let db = -(2.0 * x - t[a] - t[c]) / (h1 * h2);
            let dc = (2.0 * x - t[a] - t[b]) / (h2 * (h1 + h2));
            da * f[a] + db * f[b] + dc * f[c]
        })
        .collect()
}

/// Traces `seeds` and compares `ν_F = μ+λ` against `ν_F = 2μ+λ`.
pub fn log_density_balance(traj: &Trajectory, seeds: &[[f64; 3]], substeps: usize) -> Result<LogBalanceReport> {
    if traj.len() < 3 {
        return Err(LabError::TooFewSamples(format!("{} snapshot(s), need 3", traj.len())));
    }
    let params = &traj.params;
    let law = &params.pressure;
    let pb = law.p_bar();
    let spectra = traj
        .snapshots
        .par_iter()
        .map(|s| {
            let u_hat = forward_transform(&s.u)?;
            Ok((forward_transform(&s.rho)?, divergence(&u_hat)?))
        })
        .collect::<Result<Vec<(SpectralField<f64>, SpectralField<f64>)>>>()?;
    let paths = trace_characteristics(traj, seeds, substeps)?;
    let times = traj.times();
    let nus = [("mu+lambda", params.mu + params.lambda), ("2mu+lambda", 2.0 * params.mu + params.lambda)];
    let mut max_res = [0.0_f64; 2];
    let mut scale = [0.0_f64; 2];
    for path in &paths {
        let samples: Vec<(f64, f64)> = path
            .points
            .par_iter()
            .enumerate()
            .map(|(i, x)| (spectra[i].0.evaluate(0, x), spectra[i].1.evaluate(0, x)))
            .collect();
        let logs: Vec<f64> = samples.iter().map(|(r, _)| r.ln()).collect();
        let ldot = derivative(&times, &logs);
        for (i, &(rho, div)) in samples.iter().enumerate() {
            let dp = law.pressure(rho) - pb;
            let f = (params.mu + params.lambda) * div - dp;
            for (k, &(_, nu)) in nus.iter().enumerate() {
                max_res[k] = max_res[k].max((nu * ldot[i] + dp + f).abs());
                scale[k] = scale[k].max(f.abs() + dp.abs() + nu * ldot[i].abs());
            }
        }
    }
    let rows = nus
        .iter()
        .enumerate()
        .map(|(k, &(label, nu))| BalanceRow {
            label: label.into(),
            nu,
            max_residual: max_res[k],
            relative: if scale[k] > 0.0 { max_res[k] / scale[k] } else { 0.0 },
        })
        .collect();
    Ok(LogBalanceReport { paths: paths.len(), samples: times.len(), rows })
}
