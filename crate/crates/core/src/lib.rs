//! Simulation and analysis of strongly driven two-level and lambda-type
//! systems without the rotating-wave approximation.
//!
//! All quantities use ħ = 1; frequencies are angular and times are in the
//! reciprocal unit of whatever frequency unit the caller picks.
//!
//! The crate is split by role:
//!
//! - [`model`]: drive parameters, state vectors, shared numeric helpers.
//! - [`integrate`]: fixed-step unitary propagation of small dense systems.
//! - [`semiclassical`]: classical-field dynamics of the two- and three-level
//!   systems, with and without counter-rotating terms.
//! - [`floquet`]: truncated harmonic ladder of the rotating-frame state.
//! - [`analytic`]: closed-form adiabatic solutions.
//! - [`signal`]: residuals, demodulation, spectra and observation-time scans.
//! - [`composite`]: atom ⊗ photon-number models in truncated Fock space.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod composite;
pub mod csv;
mod error;
pub mod floquet;
pub mod integrate;
pub mod model;
pub mod semiclassical;
pub mod signal;

pub use error::{Error, Result};
pub use model::{DriveField, LambdaConfig, SpectralPeak, ThreeLevelState, TimeSeries, TwoLevelState};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
