//! Time-domain integration of the driven resonator, demodulation on the
//! detection comb, and the sweep experiments built on it.

mod demod;
pub mod ode;
mod sweep;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{ComplexSpectrum, DetectionComb, DriveComb, Frame, ResonatorModel};
use crate::Real;

pub use demod::demodulate;
pub use ode::{Dopri5, StepStats};
pub use sweep::{
    beta_slope_scan, imp_power, sweep_frequency, sweep_power, BetaSlope, SweepAxis, SweepResult, IMP_ORDERS,
};

/// Integrator and measurement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig<T> {
    /// Rotating-frame reference, Hz. `None` uses the detection-comb centre.
    pub frame_freq: Option<T>,
    /// Comb periods discarded before measuring.
    pub transient_periods: usize,
    /// Comb periods per measurement window.
    pub measure_periods: usize,
    /// Samples per comb period in the measurement windows.
    pub samples_per_period: usize,
    pub rel_tol: T,
    /// Absolute tolerance, √photons.
    pub abs_tol: T,
    /// Largest integration step, s. `None` limits steps to the sample spacing.
    pub max_step: Option<T>,
    /// Standard deviation of complex Gaussian noise added to each output
    /// amplitude, √(photons/s). Zero disables noise.
    pub noise_amplitude: T,
    pub rng_seed: u64,
    /// Allowed relative change between two consecutive measurement windows,
    /// at the drive tones and across the comb.
    pub steady_tol: T,
}

impl<T: Real> Default for SimulationConfig<T> {
    fn default() -> Self {
        Self {
            frame_freq: None,
            transient_periods: 20,
            measure_periods: 1,
            samples_per_period: 1024,
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-12),
            max_step: None,
            noise_amplitude: T::zero(),
            rng_seed: 0,
            steady_tol: T::lit(1e-4),
        }
    }
}

impl<T: Real> SimulationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero()) || !(self.abs_tol > T::zero()) {
            return Err(Error::invalid("simulation.rel_tol/abs_tol", "tolerances must be > 0"));
        }
        if self.transient_periods < 1 {
            return Err(Error::invalid("simulation.transient_periods", "must be >= 1"));
        }
        if self.measure_periods < 1 {
            return Err(Error::invalid("simulation.measure_periods", "must be >= 1"));
        }
        if self.samples_per_period < 4 {
            return Err(Error::invalid("simulation.samples_per_period", "must be >= 4"));
        }
        if let Some(h) = self.max_step {
            if !(h > T::zero()) {
                return Err(Error::invalid("simulation.max_step", "must be > 0"));
            }
        }
        if !(self.noise_amplitude >= T::zero()) {
            return Err(Error::invalid("simulation.noise_amplitude", "must be >= 0"));
        }
        if !(self.steady_tol > T::zero()) {
            return Err(Error::invalid("simulation.steady_tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Everything a single two-tone run produces. All spectra share the
/// detection-comb grid and the rotating frame of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput<T> {
    /// Output field `a_out` on the comb, √(photons/s).
    pub output: ComplexSpectrum<T>,
    /// Intracavity Fourier components `Â_k`, √photons.
    pub intracavity: ComplexSpectrum<T>,
    /// Input field `A_in,k`, √(photons/s).
    pub drive: ComplexSpectrum<T>,
    /// Time average of `|a(t)|²` over the reported window.
    pub mean_photon_number: T,
    /// Largest `|a(t)|` sampled in the reported window.
    pub max_amplitude: T,
    /// Relative change between the two measurement windows.
    pub steady_change: T,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Input–output relation `a_out,k = √(2π κ_ext) Â_k + A_in,k`.
pub fn output_field<T: Real>(
    intracavity: &ComplexSpectrum<T>,
    drive_in: &ComplexSpectrum<T>,
    kappa_ext: T,
) -> Result<ComplexSpectrum<T>> {
    intracavity.check_same_grid(drive_in)?;
    let g = (T::two_pi() * kappa_ext).sqrt();
    let amps = intracavity
        .amplitudes
        .iter()
        .zip(&drive_in.amplitudes)
        .map(|(a, ain)| a * g + ain)
        .collect();
    Ok(ComplexSpectrum {
        frequencies: intracavity.frequencies.clone(),
        amplitudes: amps,
        frame: intracavity.frame,
    })
}

/// Adds circular complex Gaussian noise with standard deviation `sigma` per
/// amplitude (σ/√2 per quadrature), deterministic in `seed`.
pub fn add_noise<T: Real>(spec: &mut ComplexSpectrum<T>, sigma: T, seed: u64) {
    if sigma == T::zero() {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = sigma / T::lit(2.0).sqrt();
    for a in &mut spec.amplitudes {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *a = *a + Complex::new(T::lit(re), T::lit(im)) * s;
    }
}

/// Integrates
/// `da/dt = i 2π(f₀ - f_frame) a - π(κ₀ + κ_ext) a - π κ_TLS(|a|) a - √(2π κ_ext) a_in(t)`
/// from `a = 0`, discards the transient, demodulates two consecutive
/// measurement windows, checks that they agree and reports the second.
pub fn simulate_two_tone<T: Real>(
    model: &ResonatorModel<T>,
    drive: &DriveComb<T>,
    det: &DetectionComb<T>,
    cfg: &SimulationConfig<T>,
) -> Result<SimulationOutput<T>> {
    model.validate()?;
    drive.validate()?;
    det.validate()?;
    cfg.validate()?;
    det.check_drive(drive)?;

    let frame_freq = cfg.frame_freq.unwrap_or(det.f_center);
    let frame = Frame::Rotating(frame_freq);
    let two_pi = T::two_pi();
    let pi = T::PI();
    let detuning = two_pi * (model.f0 - frame_freq);
    let linear = pi * model.kappa_linear();
    let tls = pi * model.kappa_tls;
    let inv_ac2 = T::one() / (model.a_c * model.a_c);
    let beta = model.beta;
    let coupling = (two_pi * model.kappa_ext).sqrt();
    let [(f1, a1), (f2, a2)] = drive.tones();
    let (w1, w2) = (two_pi * (f1 - frame_freq), two_pi * (f2 - frame_freq));

    let rhs = |t: T, a: Complex<T>| -> Complex<T> {
        let ain = a1 * Complex::from_polar(T::one(), w1 * t) + a2 * Complex::from_polar(T::one(), w2 * t);
        let damping = linear + tls / (T::one() + a.norm_sqr() * inv_ac2).powf(beta);
        Complex::new(-damping, detuning) * a - ain * coupling
    };

    let period = det.period();
    let n_window = cfg.samples_per_period * cfg.measure_periods;
    let dt = period / T::from_usize_lossy(cfg.samples_per_period);
    let t_start = period * T::from_usize_lossy(cfg.transient_periods);
    let max_step = cfg.max_step.unwrap_or(dt).min(dt);

    let mut ode = Dopri5::new(T::zero(), Complex::new(T::zero(), T::zero()), cfg.rel_tol, cfg.abs_tol, max_step);
    ode.advance_to(&rhs, t_start)?;

    let mut windows = Vec::with_capacity(2);
    for w in 0..2 {
        let mut samples = Vec::with_capacity(n_window);
        for j in 0..n_window {
            let t = t_start + dt * T::from_usize_lossy(w * n_window + j);
            ode.advance_to(&rhs, t)?;
            samples.push(ode.y());
        }
        let t0 = t_start + dt * T::from_usize_lossy(w * n_window);
        windows.push((t0, samples));
    }

    let first = demodulate(&windows[0].1, windows[0].0, dt, det, frame_freq)?;
    let (t0, samples) = &windows[1];
    let intracavity = demodulate(samples, *t0, dt, det, frame_freq)?;

    let steady_change = window_change(&first, &intracavity, det);
    if !(steady_change < cfg.steady_tol) {
        return Err(Error::NotSteady {
            change: steady_change.to_f64_lossy(),
            tolerance: cfg.steady_tol.to_f64_lossy(),
        });
    }

    let n = T::from_usize_lossy(samples.len());
    let mean_photon_number = samples.iter().map(|a| a.norm_sqr()).sum::<T>() / n;
    let max_amplitude = samples.iter().map(|a| a.norm()).fold(T::zero(), T::max);

    let drive_spec = drive.on_comb(det, frame)?;
    let mut output = output_field(&intracavity, &drive_spec, model.kappa_ext)?;
    add_noise(&mut output, cfg.noise_amplitude, cfg.rng_seed);

    let stats = ode.stats();
    Ok(SimulationOutput {
        output,
        intracavity,
        drive: drive_spec,
        mean_photon_number,
        max_amplitude,
        steady_change,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    })
}

/// Largest of the relative drive-tone change and the change of any comb bin
/// measured against the largest amplitude. The second term catches a slowly
/// decaying free oscillation that rotates at a non-drive comb frequency.
fn window_change<T: Real>(a: &ComplexSpectrum<T>, b: &ComplexSpectrum<T>, det: &DetectionComb<T>) -> T {
    let mut worst = T::zero();
    for m in [-1, 1] {
        let i = det.index_of_offset(m).expect("drive tones are on the comb");
        let (x, y) = (a.amplitudes[i], b.amplitudes[i]);
        let scale = x.norm().max(y.norm());
        if scale > T::zero() {
            worst = worst.max((x - y).norm() / scale);
        }
    }
    let scale = a.max_amplitude().max(b.max_amplitude());
    if scale > T::zero() {
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            worst = worst.max((x - y).norm() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests;
