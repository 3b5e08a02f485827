use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::PartialSpectrum;
use crate::error::{Error, Result};
use crate::linalg::{pinv_solve, Matrix};
use crate::Real;

/// Relative change allowed when the synthesis grid is doubled.
const ALIAS_TOL: f64 = 1e-9;
/// The grid is doubled at most this many times before giving up.
const MAX_DOUBLINGS: usize = 6;

fn twiddles<T: Real>(len: usize) -> Vec<Complex<T>> {
    (0..len)
        .map(|j| {
            let phase = T::two_pi() * T::from_usize_lossy(j) / T::from_usize_lossy(len);
            Complex::from_polar(T::one(), phase)
        })
        .collect()
}

/// Projections of `|a|^{n-1} a` onto each selected tone, with `a(t)`
/// synthesised from the selected tones over one comb period on `len`
/// uniform points.
fn project<T: Real>(spec: &PartialSpectrum<T>, idx: &[usize], n: usize, len: usize) -> Vec<Complex<T>> {
    // Comb indices stand in for frequencies: a common frame offset is a
    // pure phase factor that |a|^{n-1} a passes through unchanged.
    let tw = twiddles::<T>(len);
    let signal: Vec<Complex<T>> = (0..len)
        .map(|j| {
            idx.iter()
                .map(|&m| spec.intracavity[m] * tw[(m * j) % len])
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
        })
        .collect();
    let power = T::from_usize_lossy(n - 1);
    let kernel: Vec<Complex<T>> = signal
        .iter()
        .map(|a| {
            let r = a.norm();
            if r == T::zero() {
                Complex::new(T::zero(), T::zero())
            } else {
                a * r.powf(power)
            }
        })
        .collect();
    let scale = T::from_usize_lossy(len);
    idx.iter()
        .map(|&m| {
            let acc = kernel
                .iter()
                .enumerate()
                .map(|(j, g)| g * tw[(len - (m * j) % len) % len])
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
            acc / scale
        })
        .collect()
}

/// Largest `|a(t)|` of the signal synthesised from the selected tones.
pub fn synthesized_max_amplitude<T: Real>(spec: &PartialSpectrum<T>, oversample: usize) -> T {
    let idx = spec.selected_indices();
    let span = idx.last().copied().unwrap_or(0) - idx.first().copied().unwrap_or(0);
    let len = (oversample.max(1) * 8 * (span + 1)).max(64);
    let tw = twiddles::<T>(len);
    (0..len)
        .map(|j| {
            idx.iter()
                .map(|&m| spec.intracavity[m] * tw[(m * j) % len])
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
                .norm()
        })
        .fold(T::zero(), T::max)
}

/// `F{|a|^{n-1} a}_k` for every selected tone, in selection order.
///
/// The grid has `oversample · n · K · span` points for `K` selected tones
/// spanning `span` comb steps. It is doubled until a further doubling
/// changes no component by more than `1e-9` of the largest one.
pub fn nonlinear_fourier_components<T: Real>(
    spec: &PartialSpectrum<T>,
    n: usize,
    oversample: usize,
) -> Result<Vec<Complex<T>>> {
    components_with_budget(spec, n, oversample, MAX_DOUBLINGS)
}

pub(crate) fn components_with_budget<T: Real>(
    spec: &PartialSpectrum<T>,
    n: usize,
    oversample: usize,
    max_doublings: usize,
) -> Result<Vec<Complex<T>>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if oversample < 4 {
        return Err(Error::invalid("oversample", "must be >= 4"));
    }
    let idx = spec.selected_indices();
    if idx.is_empty() {
        return Err(Error::invalid("partial spectrum", "no tones selected"));
    }
    if n == 1 {
        return Ok(idx.iter().map(|&i| spec.intracavity[i]).collect());
    }
    let span = (idx[idx.len() - 1] - idx[0]).max(1);
    let mut len = oversample * n * idx.len() * span;
    let mut current = project(spec, &idx, n, len);
    let mut change = f64::INFINITY;
    for _ in 0..max_doublings.max(1) {
        len *= 2;
        let finer = project(spec, &idx, n, len);
        let scale = finer.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        let diff = current
            .iter()
            .zip(&finer)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max);
        current = finer;
        if scale == T::zero() {
            return Ok(current);
        }
        change = (diff / scale).to_f64_lossy();
        if change < ALIAS_TOL {
            return Ok(current);
        }
    }
    Err(Error::Aliasing { power: n - 1, change })
}

/// Single component `F{|a|^{n-1} a}_k` for comb tone `k`, which must be
/// selected.
pub fn nonlinear_fourier_component<T: Real>(
    spec: &PartialSpectrum<T>,
    n: usize,
    k: usize,
    oversample: usize,
) -> Result<Complex<T>> {
    let idx = spec.selected_indices();
    let pos = idx
        .iter()
        .position(|&i| i == k)
        .ok_or_else(|| Error::invalid("k", format!("tone {k} is not selected")))?;
    Ok(nonlinear_fourier_components(spec, n, oversample)?[pos])
}

/// Harmonic-balance system `Σ_l H_kl p_l = -A_in,k` over the selected tones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBalanceSystem<T> {
    /// Row `k`: `[iω_k Â_k, iÂ_k, Â_k, F{|a|²a}_k, …]`.
    pub rows: Vec<Vec<Complex<T>>>,
    /// Power `n` of the column `F{|a|^{n-1} a}`, for columns 2 onwards.
    pub powers: Vec<usize>,
    pub drive: Vec<Complex<T>>,
    /// Selected comb frequencies, laboratory Hz.
    pub frequencies: Vec<T>,
    pub frame_freq: T,
    /// Polynomial order `N`.
    pub order: usize,
}

impl<T: Real> HarmonicBalanceSystem<T> {
    pub fn columns(&self) -> usize {
        2 + self.powers.len()
    }

    /// `‖H p + A_in‖ / ‖A_in‖`.
    pub fn relative_residual(&self, p: &[T]) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for (row, ain) in self.rows.iter().zip(&self.drive) {
            let hp = row
                .iter()
                .zip(p)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (h, &x)| acc + h * x);
            num = num + (hp + ain).norm_sqr();
            den = den + ain.norm_sqr();
        }
        (num / den).sqrt()
    }
}

/// Builds `H` from the selected tones with nonlinear columns `n = 2..=N`,
/// or only odd `n` when `odd_only` is set.
pub fn build_h_matrix<T: Real>(
    spec: &PartialSpectrum<T>,
    order: usize,
    odd_only: bool,
    oversample: usize,
) -> Result<HarmonicBalanceSystem<T>> {
    if order < 1 {
        return Err(Error::invalid("order", "must be >= 1"));
    }
    let idx = spec.selected_indices();
    if idx.is_empty() {
        return Err(Error::invalid("partial spectrum", "no tones selected"));
    }
    let mut powers = vec![1];
    powers.extend((2..=order).filter(|n| !odd_only || n % 2 == 1));
    let mut columns: Vec<Vec<Complex<T>>> = Vec::with_capacity(powers.len());
    for &n in &powers {
        columns.push(nonlinear_fourier_components(spec, n, oversample)?);
    }
    let i = Complex::new(T::zero(), T::one());
    let rows = idx
        .iter()
        .enumerate()
        .map(|(r, &k)| {
            let a = spec.intracavity[k];
            let mut row = vec![i * a * spec.omega(k), i * a];
            row.extend(columns.iter().map(|c| c[r]));
            row
        })
        .collect();
    Ok(HarmonicBalanceSystem {
        rows,
        powers,
        drive: idx.iter().map(|&k| spec.drive[k]).collect(),
        frequencies: idx.iter().map(|&k| spec.frequencies[k]).collect(),
        frame_freq: spec.frame_freq,
        order,
    })
}

/// Parameters recovered from `H p = -A_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBalanceSolution<T> {
    pub kappa_ext: T,
    pub f0: T,
    /// `c_1..c_N`; entries for excluded powers are zero.
    pub c: Vec<T>,
    /// Raw solution vector.
    pub p: Vec<T>,
    pub residual_norm: T,
    /// Condition number of the column-normalised real system.
    pub condition_number: T,
    pub singular_values: Vec<T>,
}

/// Least-squares solution of `H p = -A_in` for a real `p`, via the
/// pseudo-inverse of the stacked real and imaginary parts with unit-norm
/// columns. Singular values below `rcond·σ_max` count as zero; any such value
/// is reported as rank deficiency.
///
/// Unpacking: `√(2π κ_ext) = 1/p₀`, `ω₀ = p₁/p₀`,
/// `f₀ = f_frame - ω₀/2π`, `c_n = p_{n+1}/p₀`.
pub fn solve_parameters<T: Real>(sys: &HarmonicBalanceSystem<T>, rcond: T) -> Result<HarmonicBalanceSolution<T>> {
    let k = sys.rows.len();
    let cols = sys.columns();
    if 2 * k < cols {
        return Err(Error::invalid(
            "harmonic balance",
            format!("{k} tones give {} real equations for {cols} unknowns", 2 * k),
        ));
    }
    let norms: Vec<T> = (0..cols)
        .map(|c| sys.rows.iter().map(|r| r[c].norm_sqr()).sum::<T>().sqrt())
        .collect();
    if norms.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        // an all-zero column, e.g. no signal at all
        return Err(Error::RankDeficient {
            rank: norms.iter().filter(|&&v| v > T::zero() && v.is_finite()).count(),
            columns: cols,
            singular_values: vec![],
            cutoff: rcond.to_f64_lossy(),
        });
    }
    let a = Matrix::from_fn(2 * k, cols, |r, c| {
        let z = sys.rows[r % k][c] / norms[c];
        if r < k {
            z.re
        } else {
            z.im
        }
    });
    let b: Vec<T> = (0..2 * k)
        .map(|r| {
            let z = sys.drive[r % k];
            if r < k {
                -z.re
            } else {
                -z.im
            }
        })
        .collect();
    let sol = pinv_solve(&a, &b, rcond);
    if sol.rank < cols {
        return Err(Error::RankDeficient {
            rank: sol.rank,
            columns: cols,
            singular_values: sol.singular_values.iter().map(|s| s.to_f64_lossy()).collect(),
            cutoff: sol.cutoff.to_f64_lossy(),
        });
    }
    let p: Vec<T> = sol.x.iter().zip(&norms).map(|(&x, &n)| x / n).collect();
    let p0 = p[0];
    if !(p0 > T::zero()) {
        return Err(Error::NonPhysical(format!(
            "coupling coefficient 1/sqrt(2 pi kappa_ext) came out as {p0}"
        )));
    }
    let kappa_ext = T::one() / (T::two_pi() * p0 * p0);
    let omega0 = p[1] / p0;
    let f0 = sys.frame_freq - omega0 / T::two_pi();
    let mut c = vec![T::zero(); sys.order];
    for (j, &n) in sys.powers.iter().enumerate() {
        c[n - 1] = p[2 + j] / p0;
    }
    Ok(HarmonicBalanceSolution {
        kappa_ext,
        f0,
        c,
        residual_norm: sys.relative_residual(&p),
        condition_number: sol.condition_number(),
        singular_values: sol.singular_values,
        p,
    })
}
