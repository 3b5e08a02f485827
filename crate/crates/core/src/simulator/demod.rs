//! Lock-in style demodulation of a sampled complex envelope on a detection
//! comb.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::physics::{ComplexSpectrum, DetectionComb, Frame};
use crate::Real;

/// `Â_k = (1/T_w) ∫ a(t) exp(-i 2π (f_k - f_frame) t) dt` over the window
/// sampled at `t0 + j·dt`, `j = 0..samples.len()`, by the rectangle rule
/// (exact for band-limited periodic signals). The window must span an
/// integer number of comb periods.
pub fn demodulate<T: Real>(
    samples: &[Complex<T>],
    t0: T,
    dt: T,
    det: &DetectionComb<T>,
    frame_freq: T,
) -> Result<ComplexSpectrum<T>> {
    det.validate()?;
    if samples.is_empty() || !(dt > T::zero()) {
        return Err(Error::invalid("demodulation window", "needs samples and dt > 0"));
    }
    let n = T::from_usize_lossy(samples.len());
    let periods = n * dt * det.spacing;
    let whole = periods.round();
    if whole < T::one() || (periods - whole).abs() > T::lit(1e-9) * periods.max(T::one()) {
        return Err(Error::invalid(
            "demodulation window",
            format!("spans {periods} comb periods, not an integer number"),
        ));
    }
    let nyquist = T::lit(0.5) / dt;
    let freqs = det.frequencies();
    let mut amps = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let rel = f - frame_freq;
        if rel.abs() >= nyquist {
            return Err(Error::invalid(
                "demodulation window",
                format!("tone {f} Hz is {rel} Hz from the frame, beyond the sample Nyquist limit {nyquist} Hz"),
            ));
        }
        let start = rel * t0;
        let step = rel * dt;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (j, &a) in samples.iter().enumerate() {
            let cycles = start + step * T::from_usize_lossy(j);
            let phase = -T::two_pi() * cycles.fract();
            acc = acc + a * Complex::from_polar(T::one(), phase);
        }
        amps.push(acc / n);
    }
    ComplexSpectrum::new(freqs, amps, Frame::Rotating(frame_freq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comb() -> DetectionComb<f64> {
        DetectionComb {
            f_center: 1000.0,
            spacing: 50.0,
            n_tones: 11,
        }
    }

    fn grid(n: usize, dt: f64, t0: f64, sig: impl Fn(f64) -> Complex<f64>) -> Vec<Complex<f64>> {
        (0..n).map(|j| sig(t0 + j as f64 * dt)).collect()
    }

    #[test]
    fn single_tone_orthogonality() {
        let det = comb();
        let dt = 0.02 / 256.0;
        let amp = Complex::new(0.3, -1.2);
        for m in det.offsets() {
            let rel = m as f64 * det.spacing;
            let s = grid(512, dt, 0.37, |t| amp * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * rel * t));
            let spec = demodulate(&s, 0.37, dt, &det, det.f_center).unwrap();
            for (i, a) in spec.amplitudes.iter().enumerate() {
                if det.offset_of_index(i) == m {
                    assert!((a - amp).norm() < 1e-12 * amp.norm());
                } else {
                    assert!(a.norm() < 1e-12 * amp.norm());
                }
            }
        }
    }

    #[test]
    fn constant_maps_to_frame_bin() {
        let det = comb();
        let dt = 0.02 / 64.0;
        let s = vec![Complex::new(2.0, 1.0); 64];
        let spec = demodulate(&s, 0.0, dt, &det, det.frequency(2)).unwrap();
        for (i, a) in spec.amplitudes.iter().enumerate() {
            if det.offset_of_index(i) == 2 {
                assert!((a - Complex::new(2.0, 1.0)).norm() < 1e-14);
            } else {
                assert!(a.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn two_tone_synthetic_recovery() {
        let det = comb();
        let dt = 0.02 / 128.0;
        let coeffs: Vec<(i64, Complex<f64>)> = vec![(-1, Complex::new(1.0, 0.5)), (3, Complex::new(-0.01, 0.002))];
        let s = grid(256, dt, 0.1, |t| {
            coeffs
                .iter()
                .map(|(m, c)| c * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * *m as f64 * 50.0 * t))
                .sum()
        });
        let spec = demodulate(&s, 0.1, dt, &det, det.f_center).unwrap();
        for (i, a) in spec.amplitudes.iter().enumerate() {
            let m = det.offset_of_index(i);
            let expect = coeffs.iter().find(|(mm, _)| *mm == m).map_or(Complex::new(0.0, 0.0), |(_, c)| *c);
            assert!((a - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_fractional_window_and_aliasing() {
        let det = comb();
        let s = vec![Complex::new(1.0, 0.0); 100];
        assert!(demodulate(&s, 0.0, 0.02 / 64.0, &det, det.f_center).is_err());
        // 8 samples per period cannot represent |m| = 5 tones
        let s = vec![Complex::new(1.0, 0.0); 8];
        assert!(demodulate(&s, 0.0, 0.02 / 8.0, &det, det.f_center).is_err());
    }
}
