//! Pseudo-spectral solver for the barotropic compressible Navier-Stokes
//! system on the torus, with the linear transport and momentum subsolvers
//! and a characteristics tracer.

pub mod characteristics;
pub mod momentum;
pub mod pressure;
pub mod state;
pub mod transport;

pub use characteristics::{interpolate, trace_characteristics, CharacteristicPath};
pub use momentum::{
    div_curl_ratios, solve_linear_momentum, verify_momentum_estimate, MomentumCoefficients, MomentumReport, MomentumRun,
};
pub use pressure::{PressureKind, PressureLaw};
pub use state::{
    advance, cfl_dt, lame_operator, rhs, simulate, simulate_partial, step, step_with_dissipation, FluidParams, FluidState,
    RunEnd, Snapshot, Trajectory, CFL_SAFETY, VACUUM_GUARD,
};
pub use transport::{solve_linear_transport, verify_transport_estimate, TimeField, TransportReport, TransportRun};
