//! Reference parameter sets of the measured 4.11 GHz CPW resonator.

use super::ResonatorModel;
use crate::Real;

/// Internal linear loss rate fixed from the high-power circle-fit analysis, Hz.
pub const KAPPA0_HZ: f64 = 860.0;

/// Values from the tunnelling-model fit of circle-fit data
/// (κ_ext = 6.77 kHz, κ_TLS = 3.95 kHz, a_c = 1.414, β = 0.3).
pub fn standard_fit<T: Real>() -> ResonatorModel<T> {
    ResonatorModel {
        f0: T::lit(4.11e9),
        kappa0: T::lit(KAPPA0_HZ),
        kappa_ext: T::lit(6.77e3),
        kappa_tls: T::lit(3.95e3),
        a_c: T::lit(1.414),
        beta: T::lit(0.3),
    }
}

/// Values from harmonic-balance reconstruction of a single spectrum
/// (κ_ext = 6.62 kHz, κ_TLS = 5.22 kHz, a_c = 1.641, β = 0.3).
pub fn harmonic_balance_fit<T: Real>() -> ResonatorModel<T> {
    ResonatorModel {
        f0: T::lit(4.11e9),
        kappa0: T::lit(KAPPA0_HZ),
        kappa_ext: T::lit(6.62e3),
        kappa_tls: T::lit(5.22e3),
        a_c: T::lit(1.641),
        beta: T::lit(0.3),
    }
}
