//! Levenberg–Marquardt least squares with a finite-difference Jacobian.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, spd_inverse, Matrix};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions<T> {
    pub max_iterations: usize,
    /// Stop when the relative cost reduction of an accepted step falls below
    /// this.
    pub ftol: T,
    /// Stop when every parameter moves by less than `xtol·(|x| + xtol)`.
    pub xtol: T,
    /// Stop when the scaled gradient falls below this.
    pub gtol: T,
    pub initial_lambda: T,
}

impl<T: Real> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: T::lit(1e-15),
            xtol: T::lit(1e-13),
            gtol: T::lit(1e-15),
            initial_lambda: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport<T> {
    pub params: Vec<T>,
    /// `½ Σ r²` at `params`.
    pub cost: T,
    pub residuals: Vec<T>,
    pub iterations: usize,
    /// `s² (JᵀJ)⁻¹` with `s² = Σ r² / (m - p)`; `None` if singular or
    /// `m <= p`.
    pub covariance: Option<Matrix<T>>,
    /// Cost after each accepted step, starting with the initial cost.
    pub trace: Vec<f64>,
}

fn cost_of<T: Real>(r: &[T]) -> T {
    r.iter().map(|&x| x * x).sum::<T>() / T::lit(2.0)
}

/// Central-difference Jacobian, falling back to a one-sided difference next
/// to the boundary of the feasible region. Returns `None` if neither side
/// can be probed.
fn jacobian<T, F>(f: &F, x: &[T], r0: &[T]) -> Option<Matrix<T>>
where
    T: Real,
    F: Fn(&[T]) -> Option<Vec<T>>,
{
    let m = r0.len();
    let mut jac = Matrix::zeros(m, x.len());
    let mut probe = x.to_vec();
    let base = T::eps().cbrt();
    for c in 0..x.len() {
        let h = base * x[c].abs().max(T::one());
        probe[c] = x[c] + h;
        let up = f(&probe);
        probe[c] = x[c] - h;
        let down = f(&probe);
        probe[c] = x[c];
        let (hi, lo, width) = match (&up, &down) {
            (Some(u), Some(d)) => (u.as_slice(), d.as_slice(), h + h),
            (Some(u), None) => (u.as_slice(), r0, h),
            (None, Some(d)) => (r0, d.as_slice(), h),
            (None, None) => return None,
        };
        for r in 0..m {
            jac[(r, c)] = (hi[r] - lo[r]) / width;
        }
    }
    Some(jac)
}

/// Minimises `½‖f(x)‖²`. `f` returns `None` for parameters outside the
/// feasible region; such trial steps are rejected like uphill steps.
pub fn levenberg_marquardt<T, F>(what: &str, f: F, x0: &[T], opts: &LmOptions<T>) -> Result<LmReport<T>>
where
    T: Real,
    F: Fn(&[T]) -> Option<Vec<T>>,
{
    let p = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x).ok_or_else(|| Error::invalid(what, "initial parameters are infeasible"))?;
    let m = r.len();
    if m < p {
        return Err(Error::invalid(what, format!("{m} residuals for {p} parameters")));
    }
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::invalid(what, "initial cost is not finite"));
    }
    let mut trace = vec![cost.to_f64_lossy()];
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = jacobian(&f, &x, &r).ok_or_else(|| Error::invalid(what, "Jacobian probe infeasible"))?;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.gram();
        let g = jac.tr_mul_vec(&r);
        let gmax = (0..p)
            .map(|i| g[i].abs() / (jtj[(i, i)].sqrt() * (T::lit(2.0) * cost).sqrt()).max(T::min_positive_value()))
            .fold(T::zero(), T::max);
        if gmax <= opts.gtol || cost == T::zero() {
            converged = true;
            break;
        }
        loop {
            let mut a = jtj.clone();
            for i in 0..p {
                let d = jtj[(i, i)].max(T::min_positive_value());
                a[(i, i)] = jtj[(i, i)] + lambda * d;
            }
            let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
            let step = match cholesky_solve(&a, &neg_g) {
                Some(s) => s,
                None => {
                    lambda = lambda * T::lit(10.0);
                    if lambda > T::lit(1e16) {
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial: Vec<T> = x.iter().zip(&step).map(|(&a, &b)| a + b).collect();
            let small = step
                .iter()
                .zip(&x)
                .all(|(&s, &xi)| s.abs() <= opts.xtol * (xi.abs() + opts.xtol));
            let accepted = match f(&trial) {
                Some(rt) => {
                    let ct = cost_of(&rt);
                    if ct.is_finite() && ct <= cost {
                        let reduction = (cost - ct) / cost.max(T::min_positive_value());
                        x = trial;
                        r = rt;
                        cost = ct;
                        trace.push(cost.to_f64_lossy());
                        lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                        if reduction <= opts.ftol || small {
                            converged = true;
                        }
                        true
                    } else {
                        false
                    }
                }
                None => false,
            };
            if accepted {
                if converged {
                    break 'outer;
                }
                jac = jacobian(&f, &x, &r).ok_or_else(|| Error::invalid(what, "Jacobian probe infeasible"))?;
                break;
            }
            if small {
                converged = true;
                break 'outer;
            }
            lambda = lambda * T::lit(4.0);
            if lambda > T::lit(1e16) {
                break 'outer;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: what.to_string(),
            iterations,
            cost: cost.to_f64_lossy(),
            trace,
        });
    }
    let covariance = if m > p {
        let jac = jacobian(&f, &x, &r);
        jac.and_then(|j| spd_inverse(&j.gram())).map(|mut inv| {
            let s2 = cost * T::lit(2.0) / T::from_usize_lossy(m - p);
            for i in 0..p {
                for k in 0..p {
                    inv[(i, k)] = inv[(i, k)] * s2;
                }
            }
            inv
        })
    } else {
        None
    };
    Ok(LmReport {
        params: x,
        cost,
        residuals: r,
        iterations,
        covariance,
        trace,
    })
}
