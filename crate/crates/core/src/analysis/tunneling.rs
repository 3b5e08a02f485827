use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions, LmReport};
use crate::error::{Error, Result};
use crate::physics::constants::{BOLTZMANN, PLANCK};
use crate::Real;

/// Parameters of `1/Q_i = Fδ⁰ tanh(h f_r / 2 k_B T) / (1 + ⟨n⟩/n_c)^β + δ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelingParams<T> {
    pub f_delta0_tls: T,
    pub n_c: T,
    pub beta: T,
    pub delta0: T,
}

impl<T: Real> TunnelingParams<T> {
    /// `1/Q_i` at `photons` with thermal factor `thermal`.
    pub fn inverse_qi(&self, photons: T, thermal: T) -> T {
        self.f_delta0_tls * thermal / (T::one() + photons / self.n_c).powf(self.beta) + self.delta0
    }
}

/// `tanh(h f / 2 k_B T)`.
pub fn thermal_factor<T: Real>(f_r: T, temperature: T) -> T {
    let x = T::lit(PLANCK) * f_r / (T::lit(2.0 * BOLTZMANN) * temperature);
    x.tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Residuals divided by the measured `1/Q_i` (constant relative error).
    Relative,
    Unweighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelingFitResult<T> {
    pub f_delta0_tls: T,
    pub n_c: T,
    pub beta: T,
    pub delta0: T,
    pub beta_fitted: bool,
    /// Covariance of `(Fδ⁰, n_c, β, δ₀)`; the `β` row and column are zero
    /// when `β` is fixed. Empty if the normal matrix is singular.
    pub covariance: Vec<Vec<T>>,
    /// Sum of squared (weighted) residuals.
    pub residual: T,
    pub weighting: Weighting,
    pub thermal_factor: T,
    pub iterations: usize,
}

impl<T: Real> TunnelingFitResult<T> {
    pub fn params(&self) -> TunnelingParams<T> {
        TunnelingParams {
            f_delta0_tls: self.f_delta0_tls,
            n_c: self.n_c,
            beta: self.beta,
            delta0: self.delta0,
        }
    }
}

/// Fits the standard tunnelling model to `(⟨n⟩, Q_i)` points.
///
/// With `fit_beta` false, `β` is held at `beta_fixed`. Positive parameters
/// are fitted on a log scale from a small grid of starting points spread
/// over the photon-number range; the best converged start wins.
pub fn fit_tunneling_model<T: Real>(
    points: &[(T, T)],
    f_r: T,
    temperature: T,
    fit_beta: bool,
    beta_fixed: T,
    weighting: Weighting,
) -> Result<TunnelingFitResult<T>> {
    if points.len() < 5 {
        return Err(Error::invalid("points", format!("{} points, need at least 5", points.len())));
    }
    if points.iter().any(|&(n, q)| !(n > T::zero()) || !(q > T::zero())) {
        return Err(Error::invalid("points", "photon numbers and Q_i must be > 0"));
    }
    let n_min = points.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let n_max = points.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    if !(n_max / n_min >= T::lit(100.0)) {
        return Err(Error::invalid("points", "photon numbers must span at least two decades"));
    }
    if !(f_r > T::zero()) || !(temperature > T::zero()) {
        return Err(Error::invalid("f_r/temperature", "must be > 0"));
    }
    if !fit_beta && !(beta_fixed >= T::zero() && beta_fixed <= T::one()) {
        return Err(Error::invalid("beta_fixed", "must lie in [0, 1]"));
    }
    let thermal = thermal_factor(f_r, temperature);
    let ys: Vec<T> = points.iter().map(|p| T::one() / p.1).collect();
    let y_min = ys.iter().copied().fold(T::infinity(), T::min);
    let y_max = ys.iter().copied().fold(T::neg_infinity(), T::max);
    let y_scale = ys.iter().copied().sum::<T>() / T::from_usize_lossy(ys.len());

    let unpack = |q: &[T]| -> TunnelingParams<T> {
        if fit_beta {
            TunnelingParams {
                f_delta0_tls: q[0].exp(),
                n_c: q[1].exp(),
                beta: q[2],
                delta0: q[3].exp(),
            }
        } else {
            TunnelingParams {
                f_delta0_tls: q[0].exp(),
                n_c: q[1].exp(),
                beta: beta_fixed,
                delta0: q[2].exp(),
            }
        }
    };
    let residuals = |q: &[T]| -> Option<Vec<T>> {
        let p = unpack(q);
        if fit_beta && !(p.beta > T::zero() && p.beta <= T::lit(2.0)) {
            return None;
        }
        let r: Vec<T> = points
            .iter()
            .zip(&ys)
            .map(|(&(n, _), &y)| {
                let m = p.inverse_qi(n, thermal);
                match weighting {
                    Weighting::Relative => (m - y) / y,
                    Weighting::Unweighted => (m - y) / y_scale,
                }
            })
            .collect();
        r.iter().all(|v| v.is_finite()).then_some(r)
    };

    let span = (y_max - y_min).max(y_max * T::lit(1e-3));
    let (lo, hi) = (n_min.log10(), n_max.log10());
    let mut best: Option<LmReport<T>> = None;
    let mut last_err = None;
    let betas: Vec<T> = if fit_beta {
        vec![T::lit(0.2), T::lit(0.4), T::lit(0.6)]
    } else {
        vec![beta_fixed]
    };
    for &b0 in &betas {
        for frac in [0.15, 0.35, 0.55] {
            let nc0 = T::lit(10.0).powf(lo + (hi - lo) * T::lit(frac));
            let mut x0 = vec![(span / thermal).ln(), nc0.ln()];
            if fit_beta {
                x0.push(b0);
            }
            x0.push((y_min * T::lit(0.9)).ln());
            match levenberg_marquardt("tunnelling-model fit", residuals, &x0, &LmOptions::default()) {
                Ok(rep) => {
                    if best.as_ref().is_none_or(|b| rep.cost < b.cost) {
                        best = Some(rep);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    let rep = match (best, last_err) {
        (Some(r), _) => r,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one start is attempted"),
    };
    let p = unpack(&rep.params);
    // d(physical)/d(internal) is the value itself for log parameters
    let jac: Vec<(usize, T)> = if fit_beta {
        vec![(0, p.f_delta0_tls), (1, p.n_c), (2, T::one()), (3, p.delta0)]
    } else {
        vec![(0, p.f_delta0_tls), (1, p.n_c), (3, p.delta0)]
    };
    let covariance = rep
        .covariance
        .as_ref()
        .map(|cov| {
            let mut out = vec![vec![T::zero(); 4]; 4];
            for (i, &(pi, di)) in jac.iter().enumerate() {
                for (k, &(pk, dk)) in jac.iter().enumerate() {
                    out[pi][pk] = cov[(i, k)] * di * dk;
                }
            }
            out
        })
        .unwrap_or_default();
    Ok(TunnelingFitResult {
        f_delta0_tls: p.f_delta0_tls,
        n_c: p.n_c,
        beta: p.beta,
        delta0: p.delta0,
        beta_fitted: fit_beta,
        covariance,
        residual: rep.cost * T::lit(2.0),
        weighting,
        thermal_factor: thermal,
        iterations: rep.iterations,
    })
}

/// Synthetic `(⟨n⟩, Q_i)` data with multiplicative Gaussian noise of
/// relative size `noise_rel` on `1/Q_i`, deterministic in `seed`.
pub fn generate_tunneling_data<T: Real>(
    params: &TunnelingParams<T>,
    f_r: T,
    temperature: T,
    photons: &[T],
    noise_rel: T,
    seed: u64,
) -> Vec<(T, T)> {
    let thermal = thermal_factor(f_r, temperature);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    photons
        .iter()
        .map(|&n| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let inv = params.inverse_qi(n, thermal) * (T::one() + noise_rel * T::lit(z));
            (n, T::one() / inv)
        })
        .collect()
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    if count <= 1 {
        return vec![lo; count];
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut out: Vec<T> = (0..count)
        .map(|i| T::lit(10.0).powf(a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(count - 1)))
        .collect();
    // exact endpoints, so a fit range equal to the axis range keeps them
    out[0] = lo;
    out[count - 1] = hi;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> TunnelingParams<f64> {
        TunnelingParams {
            f_delta0_tls: 2e-7,
            n_c: 2.0,
            beta: 0.3,
            delta0: 2e-7,
        }
    }

    #[test]
    fn thermal_factor_limits() {
        assert!((thermal_factor(4.11e9, 0.01f64) - 1.0).abs() < 1e-8);
        let hot = thermal_factor(4.11e9, 10.0f64);
        assert!((hot - PLANCK * 4.11e9 / (2.0 * BOLTZMANN * 10.0)).abs() < 1e-4);
    }

    #[test]
    fn noiseless_recovery_and_asymptote() {
        let n = log_space(0.1, 1e3, 41);
        let data = generate_tunneling_data(&truth(), 4.11e9, 0.01, &n, 0.0, 0);
        let fit = fit_tunneling_model(&data, 4.11e9, 0.01, true, 0.5, Weighting::Relative).unwrap();
        for (got, want) in [
            (fit.f_delta0_tls, 2e-7),
            (fit.n_c, 2.0),
            (fit.beta, 0.3),
            (fit.delta0, 2e-7),
        ] {
            assert!((got / want - 1.0).abs() < 1e-6, "{got} vs {want}");
        }
        let p = fit.params();
        let far = p.inverse_qi(1e30, fit.thermal_factor);
        assert!((far / p.delta0 - 1.0).abs() < 1e-6);
        assert_eq!(fit.covariance.len(), 4);
    }

    #[test]
    fn fixed_beta_and_weighting_variants() {
        let n = log_space(0.1, 1e3, 41);
        let data = generate_tunneling_data(&truth(), 4.11e9, 0.01, &n, 0.01, 3);
        let free = fit_tunneling_model(&data, 4.11e9, 0.01, true, 0.5, Weighting::Relative).unwrap();
        let fixed = fit_tunneling_model(&data, 4.11e9, 0.01, false, 0.5, Weighting::Relative).unwrap();
        assert_eq!(fixed.beta, 0.5);
        assert!(free.residual < fixed.residual);
        assert!(fixed.covariance[2].iter().all(|&v| v == 0.0));
        let unweighted = fit_tunneling_model(&data, 4.11e9, 0.01, true, 0.5, Weighting::Unweighted).unwrap();
        assert!((unweighted.beta - 0.3).abs() < 0.1);
    }

    #[test]
    fn input_validation() {
        let few = vec![(1.0, 1e6); 4];
        assert!(fit_tunneling_model(&few, 4e9, 0.01, true, 0.5, Weighting::Relative).is_err());
        let narrow: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 1e6)).collect();
        assert!(fit_tunneling_model(&narrow, 4e9, 0.01, true, 0.5, Weighting::Relative).is_err());
        let neg: Vec<(f64, f64)> = (0..10).map(|i| (10f64.powi(i), -1.0)).collect();
        assert!(fit_tunneling_model(&neg, 4e9, 0.01, true, 0.5, Weighting::Relative).is_err());
    }

    #[test]
    fn generator_is_seeded() {
        let n = log_space(1.0, 1e3, 5);
        assert_eq!(
            generate_tunneling_data(&truth(), 4e9, 0.01, &n, 0.01, 1),
            generate_tunneling_data(&truth(), 4e9, 0.01, &n, 0.01, 1)
        );
        assert_eq!(log_space(1.0, 100.0, 3), vec![1.0, 10.0, 100.0]);
    }
}
