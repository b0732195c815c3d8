//! Scalar functionals and monitors evaluated on states and trajectories.

pub mod energy;
pub mod flux;
pub mod interpolation;
pub mod monitors;

pub use energy::{
    diagnostics_records, hoff_functionals, hoff_integrands, hoff_running, material_derivative, momentum_forcing,
    potential_bound_constant, potential_density, sigma, total_energy, write_diagnostics_csv, DiagnosticsRecord,
    EnergyBudget, HoffIntegrands, DIAGNOSTICS_HEADER,
};
pub use flux::{
    effective_viscous_flux, flux_bound_series, flux_identity_residuals, flux_variable, lame_solve,
    verify_flux_elliptic_bounds, FluxBoundReport, FluxBoundSeries, FluxIdentityResiduals, FluxVariable,
};
pub use interpolation::{verify_log_interpolation, CutLevel, LogInterpolationReport};
pub use monitors::{
    continuation_monitor, density_bound_monitor, log_density_balance, Alarm, AlarmKind, BalanceRow,
    ContinuationReport, ContinuationThresholds, DensityBoundReport, LogBalanceReport, RunClass,
};
