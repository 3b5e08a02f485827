use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{ComplexSpectrum, Frame};
use crate::error::{Error, Result};
use crate::Real;

/// Two equal-amplitude drive tones at `f_center ∓ delta/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveComb<T> {
    pub f_center: T,
    /// Tone spacing Δ, Hz.
    pub delta: T,
    /// Amplitude per tone, √(photons/s).
    pub amplitude: T,
    pub phase1: T,
    pub phase2: T,
}

impl<T: Real> DriveComb<T> {
    pub fn new(f_center: T, delta: T, amplitude: T) -> Self {
        Self {
            f_center,
            delta,
            amplitude,
            phase1: T::zero(),
            phase2: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > T::zero()) {
            return Err(Error::invalid("drive.delta", "must be > 0"));
        }
        if !(self.amplitude >= T::zero()) {
            return Err(Error::invalid("drive.amplitude", "must be >= 0"));
        }
        if !self.f_center.is_finite() || !self.phase1.is_finite() || !self.phase2.is_finite() {
            return Err(Error::invalid("drive", "frequencies and phases must be finite"));
        }
        Ok(())
    }

    /// Lower tone `f_c - Δ/2`.
    pub fn f1(&self) -> T {
        self.f_center - self.delta / T::lit(2.0)
    }

    /// Upper tone `f_c + Δ/2`.
    pub fn f2(&self) -> T {
        self.f_center + self.delta / T::lit(2.0)
    }

    /// `(frequency, complex amplitude)` of both tones.
    pub fn tones(&self) -> [(T, Complex<T>); 2] {
        [
            (self.f1(), Complex::from_polar(self.amplitude, self.phase1)),
            (self.f2(), Complex::from_polar(self.amplitude, self.phase2)),
        ]
    }

    /// Input spectrum on the detection-comb grid: the drive tones at `m = ±1`,
    /// zero elsewhere.
    pub fn on_comb(&self, det: &DetectionComb<T>, frame: Frame<T>) -> Result<ComplexSpectrum<T>> {
        det.check_drive(self)?;
        let mut spec = ComplexSpectrum::zeros(det.frequencies(), frame);
        let [(_, a1), (_, a2)] = self.tones();
        spec.amplitudes[det.index_of_offset(-1).expect("comb has m = -1")] = a1;
        spec.amplitudes[det.index_of_offset(1).expect("comb has m = +1")] = a2;
        Ok(spec)
    }
}

/// Demodulation frequencies `f_center + m·spacing`, `|m| ≤ (n_tones-1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionComb<T> {
    pub f_center: T,
    pub spacing: T,
    pub n_tones: usize,
}

impl<T: Real> DetectionComb<T> {
    /// Comb with spacing Δ/2 centred on the drive pair.
    pub fn for_drive(drive: &DriveComb<T>, n_tones: usize) -> Self {
        Self {
            f_center: drive.f_center,
            spacing: drive.delta / T::lit(2.0),
            n_tones,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > T::zero()) {
            return Err(Error::invalid("detection.spacing", "must be > 0"));
        }
        if self.n_tones < 3 || self.n_tones % 2 == 0 {
            return Err(Error::invalid("detection.n_tones", "must be an odd number >= 3"));
        }
        if !self.f_center.is_finite() {
            return Err(Error::invalid("detection.f_center", "must be finite"));
        }
        Ok(())
    }

    pub fn half_width(&self) -> i64 {
        (self.n_tones as i64 - 1) / 2
    }

    /// Comb offsets `m` in ascending order.
    pub fn offsets(&self) -> impl Iterator<Item = i64> {
        let h = self.half_width();
        -h..=h
    }

    pub fn index_of_offset(&self, m: i64) -> Option<usize> {
        let h = self.half_width();
        (m.abs() <= h).then(|| (m + h) as usize)
    }

    pub fn offset_of_index(&self, idx: usize) -> i64 {
        idx as i64 - self.half_width()
    }

    pub fn frequency(&self, m: i64) -> T {
        self.f_center + T::from_i64(m).expect("comb offset") * self.spacing
    }

    pub fn frequencies(&self) -> Vec<T> {
        self.offsets().map(|m| self.frequency(m)).collect()
    }

    /// Demodulation window period `1/spacing`, s.
    pub fn period(&self) -> T {
        T::one() / self.spacing
    }

    /// Verifies that the drive tones sit on the comb at `m = ±1`.
    pub fn check_drive(&self, drive: &DriveComb<T>) -> Result<()> {
        self.validate()?;
        drive.validate()?;
        let tol = T::lit(1e-9) * self.spacing;
        if (drive.f_center - self.f_center).abs() > tol {
            return Err(Error::invalid(
                "detection.f_center",
                format!("comb centre {} differs from drive centre {}", self.f_center, drive.f_center),
            ));
        }
        if (drive.delta - T::lit(2.0) * self.spacing).abs() > tol {
            return Err(Error::invalid(
                "detection.spacing",
                format!("spacing {} must equal drive delta/2 = {}", self.spacing, drive.delta / T::lit(2.0)),
            ));
        }
        Ok(())
    }

    /// Comb offset `m` at which the product `k1 f1 + k2 f2` of a drive pair
    /// centred on this comb lands, if it lies inside the comb.
    pub fn offset_of_imp(&self, k1: i64, k2: i64) -> Option<i64> {
        // in units of Δ/2: f1 = fc - 1, f2 = fc + 1, so k1 + k2 must be 1
        if k1 + k2 != 1 {
            return None;
        }
        let m = k2 - k1;
        (m.abs() <= self.half_width()).then_some(m)
    }
}

/// Intermodulation product `k1 f1 + k2 f2` and its order `|k1| + |k2|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpTone<T> {
    pub frequency: T,
    pub order: u32,
}

pub fn imp_frequency<T: Real>(f1: T, f2: T, k1: i32, k2: i32) -> Result<ImpTone<T>> {
    if k1 == 0 && k2 == 0 {
        return Err(Error::invalid("imp", "(k1, k2) = (0, 0) is not a mixing product"));
    }
    let c = |k: i32| T::from_i32(k).expect("small integer");
    Ok(ImpTone {
        frequency: c(k1) * f1 + c(k2) * f2,
        order: k1.unsigned_abs() + k2.unsigned_abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imp_examples() {
        let (f1, f2) = (4.11e9 - 50.0, 4.11e9 + 50.0);
        let t = imp_frequency(f1, f2, -1, 2).unwrap();
        assert_eq!(t.frequency, 2.0 * f2 - f1);
        assert_eq!(t.order, 3);
        let t = imp_frequency(f1, f2, 1, 0).unwrap();
        assert_eq!((t.frequency, t.order), (f1, 1));
        let t = imp_frequency(f1, f2, -2, 3).unwrap();
        assert_eq!(t.frequency, f2 + 2.0 * (f2 - f1));
        assert_eq!(t.order, 5);
        assert!(imp_frequency(f1, f2, 0, 0).is_err());
    }

    #[test]
    fn imp_parity() {
        let fc: f64 = 4.11e9;
        let delta: f64 = 100.0;
        let (f1, f2) = (fc - delta / 2.0, fc + delta / 2.0);
        for k1 in -10i32..=10 {
            for k2 in -10i32..=10 {
                let order = k1.abs() + k2.abs();
                if order == 0 || order > 10 {
                    continue;
                }
                let t = imp_frequency(f1, f2, k1, k2).unwrap();
                let off = (t.frequency - fc) / (delta / 2.0);
                if k1 + k2 == 1 {
                    // in-band products: odd order, odd multiple of Δ/2 from the centre
                    assert_eq!(order % 2, 1);
                    let r = off.round();
                    assert!((off - r).abs() < 1e-6 && (r as i64).rem_euclid(2) == 1, "{k1} {k2}");
                } else {
                    assert!((t.frequency - fc).abs() > 1e3 * delta, "{k1} {k2}");
                }
            }
        }
    }

    #[test]
    fn comb_layout() {
        let drive = DriveComb::new(4.11e9, 100.0, 1.0);
        let det = DetectionComb::for_drive(&drive, 31);
        det.check_drive(&drive).unwrap();
        let f = det.frequencies();
        assert_eq!(f.len(), 31);
        assert_eq!(f[det.index_of_offset(-1).unwrap()], drive.f1());
        assert_eq!(f[det.index_of_offset(1).unwrap()], drive.f2());
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(det.offset_of_imp(-1, 2), Some(3));
        assert_eq!(det.offset_of_imp(2, -1), Some(-3));
        assert_eq!(det.offset_of_imp(1, 1), None);
        assert_eq!(det.offset_of_imp(-7, 8), Some(15));
        assert_eq!(det.offset_of_imp(-8, 9), None);
        assert_eq!(det.period(), 0.02);

        let bad = DetectionComb { n_tones: 30, ..det };
        assert!(bad.validate().is_err());
        let off = DetectionComb { spacing: 40.0, ..det };
        assert!(off.check_drive(&drive).is_err());
    }

    #[test]
    fn drive_on_comb() {
        let mut drive = DriveComb::new(5e9, 100.0, 2.0);
        drive.phase2 = std::f64::consts::FRAC_PI_2;
        let det = DetectionComb::for_drive(&drive, 7);
        let s = drive.on_comb(&det, Frame::Rotating(5e9)).unwrap();
        assert_eq!(s.amplitudes[2], Complex::new(2.0, 0.0));
        assert!((s.amplitudes[4] - Complex::new(0.0, 2.0)).norm() < 1e-15);
        assert_eq!(s.amplitudes.iter().filter(|a| a.norm() > 0.0).count(), 2);
    }
}
