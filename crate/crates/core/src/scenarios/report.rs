//! Smallness functionals of initial data and the ε-scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{NormIndices, ScenarioConfig, VelocityRecipe};
use super::generators::{oscillating_velocity, realized_wavenumber};
use crate::besov::{besov_norm, BesovIndex};
use crate::error::{LabError, Result};
use crate::littlewood_paley::{build_partition, DyadicPartition};
use crate::spectral::{inhomogeneous_sobolev_norm, lp_norm, sobolev_multiplier_norm, RealField};

type Field = RealField<f64>;

/// Measured functionals of `(ρ₀, u₀)`.
///
/// The time scales and `c2_expression` set every unknown constant
/// (`C`, `ε₀`) to 1; they are raw expressions, not verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub indices: NormIndices,
    /// `‖ρ₀ − ρ̄‖₂`
    pub rho_l2: f64,
    /// `‖ρ₀ − ρ̄‖_{Ḃ^{3/p}_{p,1}}`
    pub rho_besov: f64,
    /// `(Σ (1+|ξ|²)^s |â₀|²)^{1/2}`, a torus surrogate for `H^s`.
    pub rho_hs_surrogate: f64,
    /// `‖u₀‖_{Ḣ^{−δ}}`
    pub u_h_minus_delta: f64,
    /// `‖u₀‖_{Ḃ^{3/p−1}_{p,1}}`
    pub u_besov: f64,
    /// `‖u₀‖₂`
    pub u_l2: f64,
    /// `‖u₀‖_{Ḣ^{−δ}} + ‖u₀‖_{Ḃ^{3/p−1}_{p,1}}`
    pub u_smallness: f64,
    /// `1/(1 + ‖a₀‖_{Ḃ^{3/p}_{p,1}} + ‖a₀‖_{H^s} + ‖u₀‖₂)⁵`
    pub c2_expression: f64,
    /// `1/(1 + ‖a₀‖_{Ḃ^{3/p}_{p,1}} + ‖a₀‖_{H^s})^{(s+1/2)/(s−3/2)}`
    pub local_time_scale: f64,
    /// `1/(1 + ‖a₀‖_{Ḃ^{3/p}_{p,1}} + ‖a₀‖_{H^s} + ‖u₀‖₂)⁶`
    pub smallness_time_scale: f64,
    /// Value used for every unknown constant.
    pub constant_placeholder: f64,
}

pub fn hypothesis_report(indices: &NormIndices, rho_bar: f64, rho0: &Field, u0: &Field) -> Result<HypothesisReport> {
    indices.validate()?;
    let grid = *rho0.grid();
    if u0.grid() != &grid {
        return Err(LabError::GridMismatch);
    }
    let part = build_partition::<f64>(grid)?;
    let NormIndices { p, delta, s } = *indices;
    let a0 = rho0.add_scalar(-rho_bar);
    let rho_l2 = lp_norm(&a0, 2.0)?;
    let rho_besov = besov_norm(&a0, BesovIndex::new(3.0 / p, p, 1.0)?, &part)?;
    let rho_hs_surrogate = inhomogeneous_sobolev_norm(&a0, s)?;
    let u_h_minus_delta = sobolev_multiplier_norm(u0, -delta)?;
    let u_besov = velocity_besov(u0, p, &part)?;
    let u_l2 = lp_norm(u0, 2.0)?;
    let a_norm = rho_besov + rho_hs_surrogate;
    Ok(HypothesisReport {
        indices: *indices,
        rho_l2,
        rho_besov,
        rho_hs_surrogate,
        u_h_minus_delta,
        u_besov,
        u_l2,
        u_smallness: u_h_minus_delta + u_besov,
        c2_expression: (1.0 + a_norm + u_l2).powi(-5),
        local_time_scale: (1.0 + a_norm).powf(-(s + 0.5) / (s - 1.5)),
        smallness_time_scale: (1.0 + a_norm + u_l2).powi(-6),
        constant_placeholder: 1.0,
    })
}

fn velocity_besov(u0: &Field, p: f64, part: &DyadicPartition<f64>) -> Result<f64> {
    besov_norm(u0, BesovIndex::new(3.0 / p - 1.0, p, 1.0)?, part)
}

/// One ε of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    pub realized_eps: f64,
    pub h_minus_delta: f64,
    pub besov: f64,
    pub combined: f64,
}

/// Least-squares fit of `ln y = a + b ln ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub r_squared: f64,
}

pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() < 3 || x.len() != y.len() {
        return Err(LabError::TooFewSamples(format!("{} scan point(s), need 3", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(LabError::Degenerate("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit { slope, r_squared })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub indices: NormIndices,
    pub rows: Vec<ScanRow>,
    pub h_minus_delta_fit: LogLogFit,
    pub besov_fit: LogLogFit,
    pub combined_fit: LogLogFit,
    /// `min(δ, 1 − 3/p)`
    pub predicted_slope: f64,
}

impl EpsilonScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,realized_eps,h_minus_delta,besov,combined\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.eps, r.realized_eps, r.h_minus_delta, r.besov, r.combined));
        }
        out
    }
}

/// Regenerates the configured oscillating velocity at every `ε` and fits
/// both norms against the realized `ε`.
pub fn epsilon_scan(config: &ScenarioConfig, eps_list: &[f64]) -> Result<EpsilonScan> {
    if eps_list.len() < 3 {
        return Err(LabError::TooFewSamples(format!("{} scan point(s), need 3", eps_list.len())));
    }
    let (variant, phi) = match &config.initial.velocity {
        VelocityRecipe::Oscillating { variant, phi, .. } => (*variant, phi.clone()),
        _ => return Err(LabError::Config("epsilon scan needs an oscillating velocity recipe".into())),
    };
    let indices = config.indices;
    indices.validate()?;
    let grid = config.grid()?;
    for &e in eps_list {
        realized_wavenumber(&grid, e)?;
    }
    let part = build_partition::<f64>(grid)?;
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let u = oscillating_velocity(grid, eps, &phi, variant)?;
            let h = sobolev_multiplier_norm(&u, -indices.delta)?;
            let b = velocity_besov(&u, indices.p, &part)?;
            let realized_eps = realized_wavenumber(&grid, eps)?.1;
            Ok(ScanRow { eps, realized_eps, h_minus_delta: h, besov: b, combined: h + b })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.realized_eps).collect();
    let col = |f: fn(&ScanRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Ok(EpsilonScan {
        indices,
        h_minus_delta_fit: log_log_fit(&xs, &col(|r| r.h_minus_delta))?,
        besov_fit: log_log_fit(&xs, &col(|r| r.besov))?,
        combined_fit: log_log_fit(&xs, &col(|r| r.combined))?,
        predicted_slope: indices.delta.min(1.0 - 3.0 / indices.p),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::config::{DensityRecipe, InitialData, MonitorConfig, OscillationVariant, PhiProfile};
    use crate::cns::{FluidParams, PressureLaw};
    use crate::scenarios::generators::bump_density;
    use crate::spectral::{Grid, GridSpec};

    fn scan_config(dim: usize, n: usize, p: f64, delta: f64) -> ScenarioConfig {
        ScenarioConfig {
            name: "scan".into(),
            grid: GridSpec { dim, n, box_scale: 1.0, dealias_fraction: 2.0 / 3.0 },
            fluid: FluidParams::new(0.05, 0.02, PressureLaw::power(1.0, 1.4, 1.0, 0.5).unwrap()).unwrap(),
            initial: InitialData {
                velocity: VelocityRecipe::Oscillating { eps: 0.25, variant: OscillationVariant::Scalar, phi: PhiProfile::default() },
                density: DensityRecipe::Uniform,
            },
            indices: NormIndices { p, delta, s: 3.0 },
            seeds: vec![],
            t_end: 0.0,
            cadence: 0.1,
            monitors: MonitorConfig::default(),
        }
    }

    #[test]
    fn zero_data_gives_zero_functionals() {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let rep = hypothesis_report(&NormIndices::default(), 1.0, &Field::constant(grid, 1, 1.0), &Field::zeros(grid, 3)).unwrap();
        assert_eq!([rep.rho_l2, rep.rho_besov, rep.rho_hs_surrogate, rep.u_h_minus_delta, rep.u_besov, rep.u_l2], [0.0; 6]);
        assert_eq!(rep.c2_expression, 1.0);
    }

    #[test]
    fn translation_invariance() {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let rho = bump_density(grid, 1.0, 0.5, 0.4, 1.0, Some([1.0, 2.0, 3.0])).unwrap().rho;
        let u = oscillating_velocity(grid, 0.5, &PhiProfile::default(), OscillationVariant::Curl).unwrap();
        let a = hypothesis_report(&NormIndices::default(), 1.0, &rho, &u).unwrap();
        let shift = [3, -5, 7];
        let b = hypothesis_report(&NormIndices::default(), 1.0, &rho.roll(shift), &u.roll(shift)).unwrap();
        let pairs = [
            (a.rho_l2, b.rho_l2),
            (a.rho_besov, b.rho_besov),
            (a.rho_hs_surrogate, b.rho_hs_surrogate),
            (a.u_h_minus_delta, b.u_h_minus_delta),
            (a.u_besov, b.u_besov),
            (a.u_l2, b.u_l2),
        ];
        for (x, y) in pairs {
            assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn hs_surrogate_grows_with_amplitude() {
        let grid = Grid::new(3, 16, 1.0).unwrap();
        let u = Field::zeros(grid, 3);
        let values: Vec<f64> = [0.1, 0.2, 0.4]
            .iter()
            .map(|&a| {
                let rho = bump_density(grid, 1.0, 0.5, a, 1.0, None).unwrap().rho;
                hypothesis_report(&NormIndices::default(), 1.0, &rho, &u).unwrap().rho_hs_surrogate
            })
            .collect();
        assert!(values[0] < values[1] && values[1] < values[2]);
    }

    #[test]
    fn eps_halving_shrinks_besov_norm() {
        let cfg = scan_config(1, 256, 4.0, 0.3);
        let scan = epsilon_scan(&cfg, &[0.25, 0.125, 0.0625]).unwrap();
        let expect = 2f64.powf(-(1.0 - 3.0 / 4.0));
        for w in scan.rows.windows(2) {
            let ratio = w[1].besov / w[0].besov;
            assert!((ratio / expect - 1.0).abs() < 0.15, "{ratio} vs {expect}");
        }
        assert!((scan.predicted_slope - 0.25).abs() < 1e-15);
    }

    #[test]
    fn scan_guards_and_homogeneity() {
        let cfg = scan_config(1, 256, 4.0, 0.3);
        assert!(matches!(epsilon_scan(&cfg, &[0.25]), Err(LabError::TooFewSamples(_))));
        assert!(matches!(epsilon_scan(&cfg, &[0.25, 0.125, 0.01]), Err(LabError::Unresolvable(_))));
        let mut loud = cfg.clone();
        loud.initial.velocity =
            VelocityRecipe::Oscillating { eps: 0.25, variant: OscillationVariant::Scalar, phi: PhiProfile { amplitude: 9.0, ..Default::default() } };
        let eps = [0.25, 0.125, 0.0625, 1.0 / 32.0];
        let (a, b) = (epsilon_scan(&cfg, &eps).unwrap(), epsilon_scan(&loud, &eps).unwrap());
        assert!((a.besov_fit.slope - b.besov_fit.slope).abs() < 1e-10);
    }

    #[test]
    fn fit_recovers_power_law() {
        let x = [0.5, 0.25, 0.125, 0.0625];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.4)).collect();
        let fit = log_log_fit(&x, &y).unwrap();
        assert!((fit.slope - 0.4).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
    }
}
