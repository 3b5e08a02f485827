//! Adaptive Dormand–Prince 5(4) integrator for a single complex state.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::Real;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step statistics reported with integration failures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Dopri5<T> {
    t: T,
    y: Complex<T>,
    h: Option<T>,
    fsal: Option<Complex<T>>,
    rtol: T,
    atol: T,
    max_step: T,
    max_steps: usize,
    stats: StepStats,
}

impl<T: Real> Dopri5<T> {
    pub fn new(t0: T, y0: Complex<T>, rtol: T, atol: T, max_step: T) -> Self {
        Self {
            t: t0,
            y: y0,
            h: None,
            fsal: None,
            rtol,
            atol,
            max_step,
            max_steps: 50_000_000,
            stats: StepStats::default(),
        }
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn y(&self) -> Complex<T> {
        self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    fn scale(&self, a: Complex<T>, b: Complex<T>) -> T {
        self.atol + self.rtol * a.norm().max(b.norm())
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Integration {
            t: self.t.to_f64_lossy(),
            steps: self.stats.accepted,
            rejected: self.stats.rejected,
            last_step: self.h.map_or(f64::NAN, |h| h.to_f64_lossy()),
            reason: reason.into(),
        }
    }

    fn initial_step<F>(&mut self, f: &F, k1: Complex<T>, span: T) -> T
    where
        F: Fn(T, Complex<T>) -> Complex<T>,
    {
        // Hairer–Wanner starting step heuristic for order 5
        let sc = self.scale(self.y, self.y);
        let d0 = self.y.norm() / sc;
        let d1 = k1.norm() / sc;
        let h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
            T::lit(1e-6)
        } else {
            T::lit(0.01) * d0 / d1
        };
        let h0 = h0.min(span).min(self.max_step);
        let y1 = self.y + k1 * h0;
        let k2 = f(self.t + h0, y1);
        self.stats.evaluations += 1;
        let d2 = (k2 - k1).norm() / sc / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / dmax).powf(T::lit(0.2))
        };
        (T::lit(100.0) * h0).min(h1).min(self.max_step)
    }

    /// Integrates forward until exactly `t_end`.
    pub fn advance_to<F>(&mut self, f: &F, t_end: T) -> Result<()>
    where
        F: Fn(T, Complex<T>) -> Complex<T>,
    {
        if t_end < self.t {
            return Err(self.fail("cannot integrate backwards"));
        }
        let c = |x: f64| T::lit(x);
        while self.t < t_end {
            let k1 = match self.fsal {
                Some(k) => k,
                None => {
                    self.stats.evaluations += 1;
                    f(self.t, self.y)
                }
            };
            let remaining = t_end - self.t;
            let mut h = match self.h {
                Some(h) => h,
                None => self.initial_step(f, k1, remaining),
            };
            let floor = T::eps() * T::lit(16.0) * self.t.abs().max(T::one());
            loop {
                if self.stats.accepted + self.stats.rejected >= self.max_steps {
                    return Err(self.fail(format!("step budget of {} exhausted", self.max_steps)));
                }
                if h < floor {
                    return Err(self.fail("step size underflow"));
                }
                let clipped = h >= remaining;
                let step = if clipped { remaining } else { h };
                let (t, y) = (self.t, self.y);
                let k2 = f(t + step * c(C2), y + k1 * (step * c(A21)));
                let k3 = f(t + step * c(C3), y + (k1 * c(A31) + k2 * c(A32)) * step);
                let k4 = f(t + step * c(C4), y + (k1 * c(A41) + k2 * c(A42) + k3 * c(A43)) * step);
                let k5 = f(
                    t + step * c(C5),
                    y + (k1 * c(A51) + k2 * c(A52) + k3 * c(A53) + k4 * c(A54)) * step,
                );
                let k6 = f(
                    t + step,
                    y + (k1 * c(A61) + k2 * c(A62) + k3 * c(A63) + k4 * c(A64) + k5 * c(A65)) * step,
                );
                let y_new = y + (k1 * c(A71) + k3 * c(A73) + k4 * c(A74) + k5 * c(A75) + k6 * c(A76)) * step;
                let t_new = if clipped { t_end } else { t + step };
                let k7 = f(t_new, y_new);
                self.stats.evaluations += 6;
                let err_vec = (k1 * c(E1) + k3 * c(E3) + k4 * c(E4) + k5 * c(E5) + k6 * c(E6) + k7 * c(E7)) * step;
                let err = err_vec.norm() / self.scale(y, y_new);
                if !err.is_finite() || !y_new.re.is_finite() || !y_new.im.is_finite() {
                    self.stats.rejected += 1;
                    h = h * c(0.2);
                    continue;
                }
                let factor = if err == T::zero() {
                    c(5.0)
                } else {
                    (c(0.9) * err.powf(c(-0.2))).max(c(0.2)).min(c(5.0))
                };
                if err <= T::one() {
                    self.stats.accepted += 1;
                    self.t = t_new;
                    self.y = y_new;
                    self.fsal = Some(k7);
                    // a clipped step says nothing about the natural step size
                    let next = if clipped { h.max(step * factor) } else { step * factor };
                    self.h = Some(next.min(self.max_step));
                    break;
                }
                self.stats.rejected += 1;
                h = step * factor.min(c(1.0));
            }
        }
        Ok(())
    }
}
