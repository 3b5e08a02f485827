use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::ComplexSpectrum;
use crate::Real;

/// Intracavity and drive amplitudes on a uniform comb, with a mask of the
/// tones that take part in the harmonic balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSpectrum<T> {
    /// Rotating-frame reference, Hz.
    pub frame_freq: T,
    /// Full comb, laboratory Hz, uniformly spaced.
    pub frequencies: Vec<T>,
    /// `Â_k`, √photons.
    pub intracavity: Vec<Complex<T>>,
    /// `A_in,k`, √(photons/s).
    pub drive: Vec<Complex<T>>,
    pub selected: Vec<bool>,
}

impl<T: Real> PartialSpectrum<T> {
    /// All tones start selected.
    pub fn new(frame_freq: T, frequencies: Vec<T>, intracavity: Vec<Complex<T>>, drive: Vec<Complex<T>>) -> Result<Self> {
        let n = frequencies.len();
        if intracavity.len() != n || drive.len() != n {
            return Err(Error::invalid("partial spectrum", "frequency and amplitude lists differ in length"));
        }
        if n < 2 {
            return Err(Error::invalid("partial spectrum", "needs at least two comb tones"));
        }
        let spacing = frequencies[1] - frequencies[0];
        if !(spacing > T::zero()) {
            return Err(Error::invalid("partial spectrum", "frequencies must be strictly increasing"));
        }
        let tol = T::lit(1e-6) * spacing;
        for (i, w) in frequencies.windows(2).enumerate() {
            if ((w[1] - w[0]) - spacing).abs() > tol {
                return Err(Error::invalid(
                    "partial spectrum",
                    format!("comb is not uniform at index {}", i + 1),
                ));
            }
        }
        Ok(Self {
            frame_freq,
            frequencies,
            intracavity,
            drive,
            selected: vec![true; n],
        })
    }

    /// Pairs an intracavity spectrum with the input drive on the same grid.
    pub fn from_spectra(intracavity: &ComplexSpectrum<T>, drive: &ComplexSpectrum<T>) -> Result<Self> {
        intracavity.check_same_grid(drive)?;
        Self::new(
            intracavity.frame.reference(),
            intracavity.frequencies.clone(),
            intracavity.amplitudes.clone(),
            drive.amplitudes.clone(),
        )
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn spacing(&self) -> T {
        self.frequencies[1] - self.frequencies[0]
    }

    /// Angular frequency of tone `i` in the rotating frame, rad/s.
    pub fn omega(&self, i: usize) -> T {
        T::two_pi() * (self.frequencies[i] - self.frame_freq)
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.selected[i]).collect()
    }

    /// Tones carrying a nonzero drive.
    pub fn drive_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.drive[i].norm() > T::zero()).collect()
    }

    pub fn select_all(&mut self) {
        self.selected.iter_mut().for_each(|s| *s = true);
    }

    /// Keeps the drive tones plus the strongest remaining tones by `|Â_k|`,
    /// `count` tones in total. Ties keep the lower frequency.
    pub fn select_strongest(&mut self, count: usize) {
        let drives = self.drive_indices();
        let mut rest: Vec<usize> = (0..self.len()).filter(|i| !drives.contains(i)).collect();
        rest.sort_by(|&a, &b| {
            self.intracavity[b]
                .norm()
                .partial_cmp(&self.intracavity[a].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        self.selected = vec![false; self.len()];
        for &i in &drives {
            self.selected[i] = true;
        }
        for &i in rest.iter().take(count.saturating_sub(drives.len())) {
            self.selected[i] = true;
        }
    }

    /// Keeps the drive tones plus every tone whose `|Â_k|²` is at least
    /// `ratio` times the strongest drive-tone `|Â|²`.
    pub fn select_above(&mut self, ratio: T) {
        let drives = self.drive_indices();
        let reference = drives
            .iter()
            .map(|&i| self.intracavity[i].norm_sqr())
            .fold(T::zero(), T::max);
        for i in 0..self.len() {
            self.selected[i] = drives.contains(&i) || self.intracavity[i].norm_sqr() >= ratio * reference;
        }
    }

    /// At least `min_tones` selected, all drive tones among them.
    pub fn validate_selection(&self, min_tones: usize) -> Result<()> {
        let drives = self.drive_indices();
        if drives.is_empty() {
            return Err(Error::invalid("partial spectrum", "no drive tone present"));
        }
        if drives.iter().any(|&i| !self.selected[i]) {
            return Err(Error::invalid("partial spectrum", "every drive tone must be selected"));
        }
        let n = self.selected.iter().filter(|&&s| s).count();
        if n < min_tones {
            return Err(Error::invalid(
                "partial spectrum",
                format!("{n} tones selected, need at least {min_tones}"),
            ));
        }
        Ok(())
    }
}

/// Inverts the input–output relation: `Â_k = (a_out,k - A_in,k)/√(2π κ_ext)`.
pub fn intracavity_from_output<T: Real>(
    output: &ComplexSpectrum<T>,
    drive_in: &ComplexSpectrum<T>,
    kappa_ext_guess: T,
) -> Result<PartialSpectrum<T>> {
    if !(kappa_ext_guess > T::zero()) {
        return Err(Error::invalid("kappa_ext_guess", "must be > 0"));
    }
    output.check_same_grid(drive_in)?;
    let g = (T::two_pi() * kappa_ext_guess).sqrt();
    let intracavity = output
        .amplitudes
        .iter()
        .zip(&drive_in.amplitudes)
        .map(|(o, i)| (o - i) / g)
        .collect();
    PartialSpectrum::new(
        output.frame.reference(),
        output.frequencies.clone(),
        intracavity,
        drive_in.amplitudes.clone(),
    )
}
