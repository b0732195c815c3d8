//! Dyadic frequency analysis on periodic boxes and a pseudo-spectral solver
//! for the barotropic compressible Navier-Stokes equations.
//!
//! The harmonic-analysis layer ([`spectral`], [`littlewood_paley`], [`besov`],
//! [`paraproduct::bony`]) is generic over [`Real`] (`f32` or `f64`). The
//! solver, diagnostics and experiment drivers run in `f64`.

// `!(x > 0.0)` is the NaN-rejecting form used for every parameter check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod cns;
pub mod diagnostics;
pub mod error;
pub mod exponent;
pub mod io;
pub mod littlewood_paley;
pub mod paraproduct;
pub mod random;
pub mod scalar;
pub mod scenarios;
pub mod spectral;

pub use error::{LabError, Result};
pub use scalar::Real;
pub use spectral::{Grid, GridSpec};

/// Double-precision sampled field.
pub type Field = spectral::RealField<f64>;
/// Double-precision Fourier coefficients.
pub type Spectrum = spectral::SpectralField<f64>;
/// Single-precision sampled field.
pub type Field32 = spectral::RealField<f32>;
/// Single-precision Fourier coefficients.
pub type Spectrum32 = spectral::SpectralField<f32>;
