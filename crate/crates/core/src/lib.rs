//! Two-tone intermodulation spectroscopy of resonators with saturable
//! two-level-system loss.
//!
//! * [`physics`]: model parameters, comb layout, unit conventions.
//! * [`simulator`]: time-domain integration, demodulation and sweeps.
//! * [`reconstruction`]: harmonic-balance parameter recovery from a single
//!   intermodulation spectrum.
//! * [`analysis`]: circle fit, tunnelling-model and power-law fits.
//! * [`io`] and [`experiment`]: file formats and the declarative run driver
//!   used by the command-line tool.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod analysis;
pub mod experiment;
pub mod io;
mod error;
pub mod linalg;
pub mod physics;
pub mod reconstruction;
mod scalar;
pub mod simulator;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Real;

pub type ResonatorModelF64 = physics::ResonatorModel<f64>;
pub type DriveCombF64 = physics::DriveComb<f64>;
pub type DetectionCombF64 = physics::DetectionComb<f64>;
pub type ComplexSpectrumF64 = physics::ComplexSpectrum<f64>;
pub type SimulationConfigF64 = simulator::SimulationConfig<f64>;
pub type SweepResultF64 = simulator::SweepResult<f64>;
