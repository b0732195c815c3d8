//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cns::FluidParams;
use crate::diagnostics::ContinuationThresholds;
use crate::error::{LabError, Result};
use crate::spectral::{Grid, GridSpec};

/// Periodized Gaussian bump `amplitude · exp(−|x − center|²/(2 width²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiProfile {
    pub amplitude: f64,
    pub width: f64,
    /// Defaults to the box center.
    #[serde(default)]
    pub center: Option<[f64; 3]>,
}

impl Default for PhiProfile {
    fn default() -> Self {
        PhiProfile { amplitude: 1.0, width: 0.8, center: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationVariant {
    /// `sin(k_ε x_d)(−∂₂φ, ∂₁φ, 0)`, divergence free; 3D only.
    Curl,
    /// `sin(k_ε x_d) φ` in every component.
    Scalar,
}

/// One Fourier mode `amplitude · cos(k·x/L + phase)` added to a component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    #[serde(default)]
    pub component: usize,
    pub k: [i64; 3],
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum VelocityRecipe {
    Zero,
    Oscillating {
        eps: f64,
        #[serde(default = "default_variant")]
        variant: OscillationVariant,
        #[serde(default)]
        phi: PhiProfile,
    },
    Modes { modes: Vec<Mode> },
}

fn default_variant() -> OscillationVariant {
    OscillationVariant::Scalar
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum DensityRecipe {
    Uniform,
    /// `ρ̄ + amplitude · smoothed indicator of a ball`.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: Option<[f64; 3]>,
    },
    /// `ρ̄ + Σ modes`.
    Modes { modes: Vec<Mode> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub velocity: VelocityRecipe,
    pub density: DensityRecipe,
}

/// Norm indices `p`, `δ`, `s` of the smallness hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormIndices {
    pub p: f64,
    pub delta: f64,
    pub s: f64,
}

impl Default for NormIndices {
    fn default() -> Self {
        NormIndices { p: 4.0, delta: 0.5, s: 3.0 }
    }
}

impl NormIndices {
    pub fn validate(&self) -> Result<()> {
        let NormIndices { p, delta, s } = *self;
        if !(p > 3.0 && p < 6.0) {
            return Err(LabError::Config(format!("p = {p} outside (3, 6)")));
        }
        if !(delta > 1.0 - 3.0 / p && delta < 3.0 / p) {
            return Err(LabError::Config(format!("delta = {delta} outside ({}, {})", 1.0 - 3.0 / p, 3.0 / p)));
        }
        if !(s >= 3.0) {
            return Err(LabError::Config(format!("s = {s} below 3")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    /// Lebesgue exponent of the continuation quantity, `q > 3`.
    pub q: f64,
    pub thresholds: ContinuationThresholds,
    /// Exponent of the elliptic flux bounds, in `[2, 6]`.
    pub flux_p: f64,
    /// Particle paths for the log-density balance; 0 skips it.
    pub log_balance_paths: usize,
    pub write_snapshots: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { q: 4.0, thresholds: ContinuationThresholds::default(), flux_p: 4.0, log_balance_paths: 0, write_snapshots: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub grid: GridSpec,
    #[serde(flatten)]
    pub fluid: FluidParams,
    pub initial: InitialData,
    #[serde(default)]
    pub indices: NormIndices,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub t_end: f64,
    pub cadence: f64,
    #[serde(default)]
    pub monitors: MonitorConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::try_from(self.grid).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Checks every invariant; all failures are [`LabError::Config`].
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: LabError| LabError::Config(e.to_string());
        self.grid()?;
        self.fluid.validate().map_err(cfg)?;
        let law = &self.fluid.pressure;
        if !(law.rho_bar > law.c0 && law.rho_bar < 1.0 / law.c0) {
            return Err(LabError::Config(format!("rho_bar = {} outside (c0, 1/c0)", law.rho_bar)));
        }
        self.indices.validate()?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) || !(self.cadence > 0.0) {
            return Err(LabError::Config(format!("t_end = {}, cadence = {}", self.t_end, self.cadence)));
        }
        let m = &self.monitors;
        if !(m.q > 3.0) {
            return Err(LabError::Config(format!("monitor q = {} must exceed 3", m.q)));
        }
        if !(2.0..=6.0).contains(&m.flux_p) {
            return Err(LabError::Config(format!("flux_p = {} outside [2, 6]", m.flux_p)));
        }
        if m.thresholds.window < 2 {
            return Err(LabError::Config("threshold window below 2".into()));
        }
        Ok(())
    }
}
