use serde::{Deserialize, Serialize};

use super::constants::HBAR;
use crate::error::{Error, Result};
use crate::Real;

/// Inputs of the circulating photon-number estimate of a notch-coupled
/// resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonCalibration<T> {
    /// Transmission-line impedance, Ω.
    pub z0: T,
    /// Resonator impedance, Ω.
    pub zr: T,
    pub q_l: T,
    pub q_c_mag: T,
    /// Power at the device input, W.
    pub p_in: T,
    /// Resonance frequency, Hz.
    pub f_r: T,
}

impl<T: Real> PhotonCalibration<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.z0, self.zr, self.q_l, self.q_c_mag, self.f_r];
        if pos.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) || !(self.p_in >= T::zero()) {
            return Err(Error::invalid("calibration", "impedances, Q factors and f_r must be positive, p_in >= 0"));
        }
        Ok(())
    }
}

/// `⟨n⟩ = (Z₀/Z_r)(Q_l²/|Q_c|) 2P_in / (ħ (2π f_r)²)`.
pub fn photon_number<T: Real>(cal: &PhotonCalibration<T>) -> T {
    let w = T::two_pi() * cal.f_r;
    // ħω² overflows nothing in f64 but underflows f32, so fold ħ in as a ratio
    let p_over_hbar = cal.p_in / T::lit(HBAR);
    (cal.z0 / cal.zr) * (cal.q_l * cal.q_l / cal.q_c_mag) * T::lit(2.0) * p_over_hbar / (w * w)
}
