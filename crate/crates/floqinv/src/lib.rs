//! Floquet/monodromy analysis of driven N-level quantum systems.
//!
//! The crate simulates an N-level system coupled to a classical scalar field
//! through its dipole operator, extracts the Floquet structure of the
//! end-of-pulse propagator (the monodromy matrix), and evaluates necessary
//! and sufficient criteria for population inversion and phase-selective
//! state control, including the effective two-level reduction for N > 2 and
//! the adiabatic (piecewise-period) approximation.
//!
//! Modules:
//! - [`model`]: systems, pulses, states, and validation.
//! - [`propagation`]: unitary integration of the Schrödinger equation.
//! - [`su2`]: exact two-level propagator parametrization and inversion criteria.
//! - [`floquet`]: quasienergies, the necessary criterion, orbit geometry.
//! - [`nlevel`]: transfer classification, block reduction, condition counting.
//! - [`adiabatic`]: per-period Floquet product approximation.
//! - [`control`]: derivative-free search for pulses realizing a target transfer.
//! - [`config`]: TOML run configuration shared with the CLI.

pub mod adiabatic;
pub mod config;
pub mod control;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod nlevel;
pub mod propagation;
pub mod su2;

pub use model::{NLevelSystem, PulseShape, StateVector};
pub use propagation::{IntegratorConfig, PropagatorMatrix};
