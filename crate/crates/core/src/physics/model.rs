use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Physical parameters of a resonator with saturable TLS damping.
///
/// All rates are linewidth contributions in Hz; `a_c` is in √photons so that
/// `a_c² = n_c`, the critical photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorModel<T> {
    /// Resonance frequency, Hz.
    pub f0: T,
    /// Internal linear loss rate, Hz.
    pub kappa0: T,
    /// External coupling rate, Hz.
    pub kappa_ext: T,
    /// Zero-power TLS loss rate, Hz.
    pub kappa_tls: T,
    /// Critical amplitude, √photons.
    pub a_c: T,
    /// Saturation exponent.
    pub beta: T,
}

impl<T: Real> ResonatorModel<T> {
    pub fn new(f0: T, kappa0: T, kappa_ext: T, kappa_tls: T, a_c: T, beta: T) -> Result<Self> {
        let m = Self {
            f0,
            kappa0,
            kappa_ext,
            kappa_tls,
            a_c,
            beta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.f0, self.kappa0, self.kappa_ext, self.kappa_tls, self.a_c, self.beta];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("model", "all parameters must be finite"));
        }
        if self.f0 <= T::zero() {
            return Err(Error::invalid("model.f0", "must be > 0"));
        }
        for (name, v) in [
            ("model.kappa0", self.kappa0),
            ("model.kappa_ext", self.kappa_ext),
            ("model.kappa_tls", self.kappa_tls),
        ] {
            if v < T::zero() {
                return Err(Error::invalid(name, "rates must be >= 0"));
            }
        }
        if self.a_c <= T::zero() {
            return Err(Error::invalid("model.a_c", "must be > 0"));
        }
        if self.beta < T::zero() || self.beta > T::one() {
            return Err(Error::invalid("model.beta", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    /// `κ₀ + κ_ext`, Hz.
    pub fn kappa_linear(&self) -> T {
        self.kappa0 + self.kappa_ext
    }

    /// Low-power total linewidth `κ₀ + κ_ext + κ_TLS`, Hz.
    pub fn kappa_total(&self) -> T {
        self.kappa_linear() + self.kappa_tls
    }

    pub fn critical_photon_number(&self) -> T {
        self.a_c * self.a_c
    }

    /// Saturable TLS loss rate `κ_TLS / [1 + (|a|/a_c)²]^β` in Hz.
    pub fn tls_damping_rate(&self, amp: T) -> T {
        let x = amp / self.a_c;
        self.kappa_tls / (T::one() + x * x).powf(self.beta)
    }

    /// Total amplitude-dependent linewidth, Hz.
    pub fn total_damping_rate(&self, amp: T) -> T {
        self.kappa_linear() + self.tls_damping_rate(amp)
    }

    /// Coefficients `c_1..c_N` (angular units) of `Σ c_n |a|^{n-1}`, the power
    /// series of `π[κ₀ + κ_ext + κ_TLS(|a|)]` in `|a|²`. Entries for even `n`
    /// are exactly zero. Returns an empty list for `order == 0`.
    pub fn damping_taylor_coefficients(&self, order: usize) -> Vec<T> {
        let pi = T::PI();
        let inv_ac2 = T::one() / (self.a_c * self.a_c);
        let mut out = vec![T::zero(); order];
        if order == 0 {
            return out;
        }
        out[0] = pi * self.kappa_total();
        // binom(-β, m) / a_c^{2m}, built incrementally
        let mut term = pi * self.kappa_tls;
        for n in (3..=order).step_by(2) {
            let m = T::from_usize_lossy((n - 1) / 2);
            term = term * (-self.beta - (m - T::one())) / m * inv_ac2;
            out[n - 1] = term;
        }
        out
    }

    /// Linear steady-state intracavity amplitude for a single drive tone,
    /// `-√(2πκ_ext) a_in / (i 2π(f_d - f₀) + π κ_total)`, with the TLS bath
    /// at its unsaturated rate.
    pub fn steady_state_amplitude_linear(&self, drive_freq: T, drive_amp: Complex<T>) -> Complex<T> {
        let two_pi = T::two_pi();
        let denom = Complex::new(T::PI() * self.kappa_total(), two_pi * (drive_freq - self.f0));
        -drive_amp * (two_pi * self.kappa_ext).sqrt() / denom
    }

    /// Drive amplitude (√(photons/s)) of one tone that yields `photons`
    /// intracavity photons on resonance under the linear response of
    /// [`steady_state_amplitude_linear`](Self::steady_state_amplitude_linear).
    pub fn drive_for_photon_number(&self, photons: T) -> T {
        photons.sqrt() * T::PI() * self.kappa_total() / (T::two_pi() * self.kappa_ext).sqrt()
    }
}
