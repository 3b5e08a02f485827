//! Harmonic-balance reconstruction of linear and nonlinear resonator
//! parameters from one intermodulation spectrum.
//!
//! [`build_h_matrix`] and [`solve_parameters`] only assume a damping that
//! is a power series in `|a|`; the saturable TLS law enters in
//! [`fit_tls_damping`] alone.

mod harmonic;
mod partial;
mod tls_fit;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::presets::KAPPA0_HZ;
use crate::physics::ComplexSpectrum;
use crate::Real;

pub use harmonic::{
    build_h_matrix, nonlinear_fourier_component, nonlinear_fourier_components, solve_parameters,
    synthesized_max_amplitude, HarmonicBalanceSolution, HarmonicBalanceSystem,
};
pub use partial::{intracavity_from_output, PartialSpectrum};
pub use tls_fit::{fit_tls_damping, reconstructed_tls_rate, DampingCurvePoint, TlsDampingFit};

/// How tones are picked for the harmonic balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToneSelection<T> {
    /// The drive tones plus the strongest others, `count` in total.
    Strongest { count: usize },
    /// The drive tones plus all tones with `|Â|²` at least `ratio` times the
    /// drive-tone `|Â|²`.
    PowerRatio { ratio: T },
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionOptions<T> {
    /// First-pass `κ_ext` used to infer `Â_k` from the output field, Hz.
    /// Must be set; the default of zero is rejected.
    pub kappa_ext_guess: T,
    /// Internal linear loss assumed known, Hz.
    pub kappa0: T,
    /// Saturation exponent held fixed in the TLS fit, or the start value when
    /// `fit_beta` is set.
    pub beta: T,
    pub fit_beta: bool,
    /// Polynomial order `N`.
    pub order: usize,
    pub odd_only: bool,
    pub selection: ToneSelection<T>,
    /// Relative singular-value cutoff of the pseudo-inverse.
    pub rcond: T,
    pub oversample: usize,
    /// Re-derive `Â_k` with the first-pass `κ_ext` and solve again.
    pub two_pass: bool,
    /// Amplitude grid size of the TLS fit.
    pub grid_points: usize,
}

impl<T: Real> Default for ReconstructionOptions<T> {
    fn default() -> Self {
        Self {
            kappa_ext_guess: T::zero(),
            kappa0: T::lit(KAPPA0_HZ),
            beta: T::lit(0.3),
            fit_beta: false,
            order: 9,
            odd_only: true,
            selection: ToneSelection::Strongest { count: 16 },
            rcond: T::lit(1e-10),
            oversample: 4,
            two_pass: true,
            grid_points: 200,
        }
    }
}

impl<T: Real> ReconstructionOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_ext_guess > T::zero()) {
            return Err(Error::invalid("reconstruction.kappa_ext_guess", "must be > 0"));
        }
        if !(self.kappa0 >= T::zero()) {
            return Err(Error::invalid("reconstruction.kappa0", "must be >= 0"));
        }
        if !(self.beta >= T::zero() && self.beta <= T::one()) {
            return Err(Error::invalid("reconstruction.beta", "must lie in [0, 1]"));
        }
        if self.order < 1 {
            return Err(Error::invalid("reconstruction.order", "must be >= 1"));
        }
        if !(self.rcond > T::zero() && self.rcond < T::one()) {
            return Err(Error::invalid("reconstruction.rcond", "must lie in (0, 1)"));
        }
        if self.oversample < 4 {
            return Err(Error::invalid("reconstruction.oversample", "must be >= 4"));
        }
        match self.selection {
            ToneSelection::Strongest { count } if count < 4 => {
                Err(Error::invalid("reconstruction.selection.count", "must be >= 4"))
            }
            ToneSelection::PowerRatio { ratio } if !(ratio > T::zero()) => {
                Err(Error::invalid("reconstruction.selection.ratio", "must be > 0"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult<T> {
    pub kappa_ext: T,
    pub f0: T,
    /// `c_1..c_N`, rad/s per `|a|^{n-1}`.
    pub c: Vec<T>,
    pub kappa_tls: T,
    pub a_c: T,
    pub beta: T,
    /// `true` if `beta` was held at its input value.
    pub beta_fixed: bool,
    pub residual_norm: T,
    pub condition_number: T,
    pub singular_values: Vec<T>,
    /// `κ_ext` of the first pass, Hz.
    pub kappa_ext_first_pass: T,
    /// Frequencies of the tones used, laboratory Hz.
    pub tones: Vec<T>,
    /// Largest `|a(t)|` of the synthesised intracavity signal.
    pub max_amplitude: T,
    pub curve: Vec<DampingCurvePoint<T>>,
    pub warnings: Vec<String>,
}

fn single_pass<T: Real>(
    output: &ComplexSpectrum<T>,
    drive: &ComplexSpectrum<T>,
    kappa_ext_guess: T,
    opts: &ReconstructionOptions<T>,
) -> Result<(PartialSpectrum<T>, HarmonicBalanceSolution<T>)> {
    let mut spec = intracavity_from_output(output, drive, kappa_ext_guess)?;
    match opts.selection {
        ToneSelection::Strongest { count } => spec.select_strongest(count),
        ToneSelection::PowerRatio { ratio } => spec.select_above(ratio),
        ToneSelection::All => spec.select_all(),
    }
    spec.validate_selection(4)?;
    let sys = build_h_matrix(&spec, opts.order, opts.odd_only, opts.oversample)?;
    let sol = solve_parameters(&sys, opts.rcond)?;
    Ok((spec, sol))
}

/// Full pipeline: infer `Â_k` from the output with the guessed `κ_ext`,
/// select tones, solve the harmonic balance, optionally repeat with the
/// corrected `κ_ext`, and fit the saturable TLS law to the recovered
/// damping curve.
///
/// The second pass uses `√(κ_guess · κ_first)`. Rescaling `Â` by a wrong
/// `κ_ext` guess multiplies the recovered value by `κ_true/κ_guess`, so the
/// geometric mean removes that bias exactly for the linear terms.
pub fn reconstruct<T: Real>(
    output: &ComplexSpectrum<T>,
    drive: &ComplexSpectrum<T>,
    opts: &ReconstructionOptions<T>,
) -> Result<ReconstructionResult<T>> {
    opts.validate()?;
    let (mut spec, mut sol) = single_pass(output, drive, opts.kappa_ext_guess, opts)?;
    let first = sol.kappa_ext;
    if opts.two_pass {
        let refined = (opts.kappa_ext_guess * first).sqrt();
        (spec, sol) = single_pass(output, drive, refined, opts)?;
    }
    let max_amplitude = synthesized_max_amplitude(&spec, opts.oversample);
    let fit = fit_tls_damping(
        &sol.c,
        opts.kappa0,
        sol.kappa_ext,
        opts.beta,
        max_amplitude,
        opts.fit_beta,
        opts.grid_points,
    )?;
    let tones = spec.selected_indices().iter().map(|&i| spec.frequencies[i]).collect();
    Ok(ReconstructionResult {
        kappa_ext: sol.kappa_ext,
        f0: sol.f0,
        c: sol.c,
        kappa_tls: fit.kappa_tls,
        a_c: fit.a_c,
        beta: fit.beta,
        beta_fixed: !fit.beta_fitted,
        residual_norm: sol.residual_norm,
        condition_number: sol.condition_number,
        singular_values: sol.singular_values,
        kappa_ext_first_pass: first,
        tones,
        max_amplitude,
        curve: fit.curve,
        warnings: fit.warnings,
    })
}
