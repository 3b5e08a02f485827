use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Reference frame of a spectrum.
///
/// Frequencies are always stored as absolute (laboratory) values in Hz. A
/// rotating frame at `f_ref` means the underlying time signal was
/// `Σ A_k exp(i 2π (f_k - f_ref) t)`. With a shared time origin the
/// amplitudes `A_k` are the same in every frame, so converting between
/// frames only changes the tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "f_ref_hz", rename_all = "snake_case")]
pub enum Frame<T> {
    Laboratory,
    Rotating(T),
}

impl<T: Real> Frame<T> {
    pub fn reference(&self) -> T {
        match self {
            Frame::Laboratory => T::zero(),
            Frame::Rotating(f) => *f,
        }
    }
}

/// Complex amplitudes on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum<T> {
    pub frequencies: Vec<T>,
    pub amplitudes: Vec<Complex<T>>,
    pub frame: Frame<T>,
}

impl<T: Real> ComplexSpectrum<T> {
    pub fn new(frequencies: Vec<T>, amplitudes: Vec<Complex<T>>, frame: Frame<T>) -> Result<Self> {
        if frequencies.len() != amplitudes.len() {
            return Err(Error::invalid(
                "spectrum",
                format!("{} frequencies but {} amplitudes", frequencies.len(), amplitudes.len()),
            ));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("spectrum.frequencies", "must be strictly increasing"));
        }
        Ok(Self {
            frequencies,
            amplitudes,
            frame,
        })
    }

    pub fn zeros(frequencies: Vec<T>, frame: Frame<T>) -> Self {
        let amplitudes = vec![Complex::new(T::zero(), T::zero()); frequencies.len()];
        Self {
            frequencies,
            amplitudes,
            frame,
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn power(&self, idx: usize) -> T {
        self.amplitudes[idx].norm_sqr()
    }

    /// Index of the grid point within `1e-9` of the grid spacing of `freq`.
    pub fn index_of(&self, freq: T) -> Option<usize> {
        let tol = self.tolerance();
        self.frequencies.iter().position(|&f| (f - freq).abs() <= tol)
    }

    fn tolerance(&self) -> T {
        let step = self
            .frequencies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::infinity(), T::min);
        if step.is_finite() {
            step * T::lit(1e-9)
        } else {
            T::lit(1e-9) * self.frequencies.first().map_or(T::one(), |f| f.abs().max(T::one()))
        }
    }

    /// Errors unless `other` has the same frame tag and frequency grid.
    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.frame != other.frame {
            return Err(Error::GridMismatch(format!("frames differ: {:?} vs {:?}", self.frame, other.frame)));
        }
        if self.len() != other.len() {
            return Err(Error::GridMismatch(format!("{} vs {} points", self.len(), other.len())));
        }
        let tol = self.tolerance();
        if let Some(i) = (0..self.len()).find(|&i| (self.frequencies[i] - other.frequencies[i]).abs() > tol) {
            return Err(Error::GridMismatch(format!(
                "point {i}: {} Hz vs {} Hz",
                self.frequencies[i], other.frequencies[i]
            )));
        }
        Ok(())
    }

    /// Same data tagged with another frame (amplitudes are frame invariant).
    pub fn in_frame(&self, frame: Frame<T>) -> Self {
        Self {
            frame,
            ..self.clone()
        }
    }

    pub fn max_amplitude(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm()).fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        let c = Complex::new(1.0, 0.0);
        assert!(ComplexSpectrum::new(vec![1.0, 2.0], vec![c], Frame::Laboratory).is_err());
        assert!(ComplexSpectrum::new(vec![2.0, 1.0], vec![c, c], Frame::Laboratory).is_err());
        let s = ComplexSpectrum::new(vec![1.0, 2.0], vec![c, c], Frame::Laboratory).unwrap();
        assert_eq!(s.index_of(2.0), Some(1));
        assert_eq!(s.index_of(1.5), None);
    }

    #[test]
    fn grid_and_frame_consistency() {
        let a = ComplexSpectrum::<f64>::zeros(vec![10.0, 20.0, 30.0], Frame::Rotating(20.0));
        let b = a.clone();
        a.check_same_grid(&b).unwrap();
        let c = a.in_frame(Frame::Laboratory);
        assert!(matches!(a.check_same_grid(&c), Err(Error::GridMismatch(_))));
        let d = ComplexSpectrum::<f64>::zeros(vec![10.0, 20.0, 31.0], Frame::Rotating(20.0));
        assert!(a.check_same_grid(&d).is_err());
    }
}
