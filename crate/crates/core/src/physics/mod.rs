//! Domain types, unit conventions and closed-form relations shared by the
//! simulator, the reconstruction and the analysis chain.
//!
//! Units: frequencies and all loss rates `κ` are stored in Hz as linewidth
//! contributions. The angular half-rate entering the equation of motion is
//! `π κ`. Amplitudes are normalised so that `|a|²` is the intracavity photon
//! number and `|a_in|²` an input photon flux in photons/s.

mod calibration;
mod comb;
pub mod constants;
mod model;
pub mod presets;
mod spectrum;

pub use calibration::{photon_number, PhotonCalibration};
pub use comb::{imp_frequency, DetectionComb, DriveComb, ImpTone};
pub use model::ResonatorModel;
pub use spectrum::{ComplexSpectrum, Frame};
