use serde::{Deserialize, Serialize};

use crate::analysis::{levenberg_marquardt, LmOptions};
use crate::error::{Error, Result};
use crate::Real;

/// One point of the reconstructed damping curve, rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingCurvePoint<T> {
    pub amplitude: T,
    /// `κ̂(|a|)` from the polynomial coefficients.
    pub kappa_hat: T,
    /// Fitted saturable TLS rate at the same amplitude.
    pub kappa_fit: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlsDampingFit<T> {
    pub kappa_tls: T,
    pub a_c: T,
    pub beta: T,
    /// `true` if `beta` was a free parameter.
    pub beta_fitted: bool,
    /// Root-mean-square of `κ_fit - κ̂` over the grid, Hz.
    pub rms_residual: T,
    pub curve: Vec<DampingCurvePoint<T>>,
    pub warnings: Vec<String>,
}

/// Amplitude-dependent TLS rate implied by the polynomial damping,
/// `κ̂(|a|) = (2/2π) Σ c_n |a|^{n-1} - κ₀ - κ_ext`, in Hz.
pub fn reconstructed_tls_rate<T: Real>(c: &[T], kappa0: T, kappa_ext: T, amp: T) -> T {
    let mut acc = T::zero();
    let mut pow = T::one();
    for &cn in c {
        acc = acc + cn * pow;
        pow = pow * amp;
    }
    acc * T::lit(2.0) / T::two_pi() - kappa0 - kappa_ext
}

fn saturable<T: Real>(kappa_tls: T, a_c: T, beta: T, amp: T) -> T {
    let x = amp / a_c;
    kappa_tls / (T::one() + x * x).powf(beta)
}

/// Least-squares fit of `κ_TLS / [1 + (|a|/a_c)²]^β` to `κ̂(|a|)` on
/// `grid_points` amplitudes spanning `[0, amp_max]`. With `fit_beta` the
/// exponent is fitted as well, starting from `beta`, and a degeneracy
/// warning is attached.
pub fn fit_tls_damping<T: Real>(
    c: &[T],
    kappa0: T,
    kappa_ext: T,
    beta: T,
    amp_max: T,
    fit_beta: bool,
    grid_points: usize,
) -> Result<TlsDampingFit<T>> {
    if c.is_empty() {
        return Err(Error::invalid("c", "needs at least one coefficient"));
    }
    if !(kappa0 >= T::zero()) {
        return Err(Error::invalid("kappa0", "must be >= 0"));
    }
    if !(amp_max > T::zero()) || !amp_max.is_finite() {
        return Err(Error::invalid("amp_max", "must be finite and > 0"));
    }
    if !(beta >= T::zero() && beta <= T::one()) {
        return Err(Error::invalid("beta", "must lie in [0, 1]"));
    }
    if grid_points < 4 {
        return Err(Error::invalid("grid_points", "must be >= 4"));
    }
    let grid: Vec<T> = (0..grid_points)
        .map(|i| amp_max * T::from_usize_lossy(i) / T::from_usize_lossy(grid_points - 1))
        .collect();
    let target: Vec<T> = grid.iter().map(|&x| reconstructed_tls_rate(c, kappa0, kappa_ext, x)).collect();
    let k0 = target[0];
    if !(k0 > T::zero()) {
        return Err(Error::NonPhysical(format!(
            "reconstructed TLS rate at zero amplitude is {k0} Hz, not positive"
        )));
    }

    // small-amplitude curvature: c₃ = -π κ_TLS β / a_c²
    let ac_guess = match c.get(2) {
        Some(&c3) if c3 < T::zero() && beta > T::zero() => (-T::PI() * k0 * beta / c3).sqrt(),
        _ => amp_max,
    };
    let residuals = |q: &[T]| -> Option<Vec<T>> {
        let (kt, ac) = (q[0].exp(), q[1].exp());
        let b = if fit_beta { q[2] } else { beta };
        if !(b >= T::zero() && b <= T::one()) || !kt.is_finite() || !ac.is_finite() || ac == T::zero() {
            return None;
        }
        Some(
            grid.iter()
                .zip(&target)
                .map(|(&x, &y)| (saturable(kt, ac, b, x) - y) / k0)
                .collect(),
        )
    };
    let opts = LmOptions::default();
    let mut best: Option<crate::analysis::LmReport<T>> = None;
    let mut last_err = None;
    for factor in [1.0, 0.3, 3.0] {
        let mut x0 = vec![k0.ln(), (ac_guess * T::lit(factor)).ln()];
        if fit_beta {
            x0.push(beta);
        }
        match levenberg_marquardt("TLS damping fit", residuals, &x0, &opts) {
            Ok(rep) => {
                if best.as_ref().is_none_or(|b| rep.cost < b.cost) {
                    best = Some(rep);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let rep = match (best, last_err) {
        (Some(r), _) => r,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one start is attempted"),
    };
    let kappa_tls = rep.params[0].exp();
    let a_c = rep.params[1].exp();
    let beta_out = if fit_beta { rep.params[2] } else { beta };
    let curve: Vec<DampingCurvePoint<T>> = grid
        .iter()
        .zip(&target)
        .map(|(&x, &y)| DampingCurvePoint {
            amplitude: x,
            kappa_hat: y,
            kappa_fit: saturable(kappa_tls, a_c, beta_out, x),
        })
        .collect();
    let rms_residual = (curve.iter().map(|p| (p.kappa_fit - p.kappa_hat).powi(2)).sum::<T>()
        / T::from_usize_lossy(curve.len()))
    .sqrt();
    let mut warnings = Vec::new();
    if fit_beta {
        warnings.push(
            "beta was fitted jointly with a_c; the two are nearly degenerate over a limited amplitude range".to_string(),
        );
    }
    if a_c > amp_max * T::lit(10.0) {
        warnings.push(format!(
            "fitted a_c = {a_c} lies far beyond the largest realised amplitude {amp_max}"
        ));
    }
    Ok(TlsDampingFit {
        kappa_tls,
        a_c,
        beta: beta_out,
        beta_fitted: fit_beta,
        rms_residual,
        curve,
        warnings,
    })
}
