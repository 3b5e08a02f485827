use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// `y = 10^l · x^k` fitted on log₁₀–log₁₀ axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub k: T,
    pub l: T,
    pub stderr_k: T,
    pub stderr_l: T,
    /// Smallest and largest `x` actually used.
    pub x_min: T,
    pub x_max: T,
    pub n_points: usize,
}

impl<T: Real> PowerLawFit<T> {
    pub fn eval(&self, x: T) -> T {
        T::lit(10.0).powf(self.l) * x.powf(self.k)
    }
}

/// Ordinary least squares of `log₁₀ y` on `log₁₀ x` over the points with
/// `x` in the closed interval `range`. Needs at least four such points, all
/// with positive `x` and `y`.
pub fn fit_power_law<T: Real>(points: &[(T, T)], range: (T, T)) -> Result<PowerLawFit<T>> {
    let (lo, hi) = range;
    if !(lo <= hi) {
        return Err(Error::invalid("n_range", "lower bound exceeds upper bound"));
    }
    let sel: Vec<(T, T)> = points.iter().copied().filter(|&(x, _)| x >= lo && x <= hi).collect();
    if sel.len() < 4 {
        return Err(Error::invalid(
            "n_range",
            format!("{} points inside [{lo}, {hi}], need at least 4", sel.len()),
        ));
    }
    if sel.iter().any(|&(x, y)| !(x > T::zero()) || !(y > T::zero())) {
        return Err(Error::invalid("points", "power-law fit needs positive x and y"));
    }
    let logs: Vec<(T, T)> = sel.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let n = T::from_usize_lossy(logs.len());
    let mx = logs.iter().map(|p| p.0).sum::<T>() / n;
    let my = logs.iter().map(|p| p.1).sum::<T>() / n;
    let sxx = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    if !(sxx > T::zero()) {
        return Err(Error::invalid("points", "all x values coincide"));
    }
    let sxy = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let k = sxy / sxx;
    let l = my - k * mx;
    let ssr = logs.iter().map(|p| (p.1 - l - k * p.0).powi(2)).sum::<T>();
    let s2 = ssr / (n - T::lit(2.0));
    let stderr_k = (s2 / sxx).sqrt();
    let stderr_l = (s2 * (T::one() / n + mx * mx / sxx)).sqrt();
    let x_min = sel.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let x_max = sel.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    Ok(PowerLawFit {
        k,
        l,
        stderr_k,
        stderr_l,
        x_min,
        x_max,
        n_points: sel.len(),
    })
}
