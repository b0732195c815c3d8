//! Initial-data recipes, smallness reports, ε-scans and full experiment runs.

pub mod config;
pub mod experiment;
pub mod generators;
pub mod report;

pub use config::{
    DensityRecipe, InitialData, Mode, MonitorConfig, NormIndices, OscillationVariant, PhiProfile, ScenarioConfig,
    VelocityRecipe,
};
pub use experiment::{
    analyze_trajectory, run_experiment, run_in_memory, ConservationReport, Experiment, ExperimentSummary,
    FluxIdentitySummary, TrajectoryAnalysis, ENERGY_TOL,
};
pub use generators::{
    bump_density, initial_state, oscillating_velocity, phi_field, realized_wavenumber, BumpDensity, GeneratedData,
};
pub use report::{epsilon_scan, hypothesis_report, log_log_fit, EpsilonScan, HypothesisReport, LogLogFit, ScanRow};
