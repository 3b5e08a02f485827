//! Notch-type S21 model and its staged circle fit with diameter correction.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions};
use super::quality::qi_from_ql;
use crate::error::{Error, Result};
use crate::Real;

/// A measured or synthetic transmission trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S21Trace<T> {
    pub frequencies: Vec<T>,
    pub s21: Vec<Complex<T>>,
    /// Probe power, dBm, if known.
    pub power_dbm: Option<T>,
    /// Sample temperature, K, if known.
    pub temperature: Option<T>,
}

impl<T: Real> S21Trace<T> {
    pub fn new(frequencies: Vec<T>, s21: Vec<Complex<T>>) -> Result<Self> {
        let t = Self {
            frequencies,
            s21,
            power_dbm: None,
            temperature: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.s21.len() {
            return Err(Error::invalid("s21 trace", "frequency and S21 lists differ in length"));
        }
        if self.frequencies.len() < 20 {
            return Err(Error::invalid("s21 trace", "needs at least 20 points"));
        }
        if self.frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("s21 trace", "frequencies must be strictly increasing"));
        }
        if self.s21.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("s21 trace", "S21 values must be finite"));
        }
        Ok(())
    }
}

/// Parameters of
/// `S21(f) = a e^{iα} e^{-2πifτ} [1 - (Q_l/|Q_c|) e^{iφ} / (1 + 2i Q_l (f/f_r - 1))]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleParams<T> {
    pub f_r: T,
    pub q_l: T,
    pub q_c_mag: T,
    pub phi: T,
    pub a: T,
    pub alpha: T,
    pub tau: T,
}

impl<T: Real> CircleParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("f_r", self.f_r), ("q_l", self.q_l), ("q_c_mag", self.q_c_mag), ("a", self.a)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!("s21.{name}"), "must be finite and > 0"));
            }
        }
        if !self.phi.is_finite() || !self.alpha.is_finite() || !self.tau.is_finite() {
            return Err(Error::invalid("s21", "phi, alpha and tau must be finite"));
        }
        Ok(())
    }

    pub fn s21(&self, f: T) -> Complex<T> {
        let x = (f - self.f_r) / self.f_r;
        self.s21_offset(f, x)
    }

    fn s21_offset(&self, f: T, x: T) -> Complex<T> {
        let env = Complex::from_polar(self.a, self.alpha - T::two_pi() * f * self.tau);
        let k = Complex::from_polar(self.q_l / self.q_c_mag, self.phi);
        let den = Complex::new(T::one(), T::lit(2.0) * self.q_l * x);
        env * (Complex::new(T::one(), T::zero()) - k / den)
    }

    /// Linewidth `f_r / Q_l`, Hz.
    pub fn linewidth(&self) -> T {
        self.f_r / self.q_l
    }
}

/// `points` equally spaced frequencies covering `linewidths` loaded
/// linewidths centred on `f_r`.
pub fn resonance_grid<T: Real>(f_r: T, q_l: T, points: usize, linewidths: T) -> Vec<T> {
    let span = linewidths * f_r / q_l;
    let n = T::from_usize_lossy(points.max(2) - 1);
    (0..points)
        .map(|i| f_r - span / T::lit(2.0) + span * T::from_usize_lossy(i) / n)
        .collect()
}

/// Evaluates the model on `frequencies` and adds circular complex Gaussian
/// noise `noise_db` decibels below `a²` (`None` for a noiseless trace).
pub fn generate_s21<T: Real>(
    params: &CircleParams<T>,
    frequencies: &[T],
    noise_db: Option<T>,
    seed: u64,
) -> Result<S21Trace<T>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = noise_db.map(|db| params.a * T::lit(10.0).powf(db / T::lit(20.0)) / T::lit(2.0).sqrt());
    let s21 = frequencies
        .iter()
        .map(|&f| {
            let z = params.s21(f);
            match sigma {
                Some(s) => {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    z + Complex::new(T::lit(re), T::lit(im)) * s
                }
                None => z,
            }
        })
        .collect();
    S21Trace::new(frequencies.to_vec(), s21)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFitResult<T> {
    pub f_r: T,
    pub q_l: T,
    pub q_c_mag: T,
    pub q_i: T,
    pub phi: T,
    pub a: T,
    pub alpha: T,
    pub tau: T,
    /// RMS of `|S21_model - S21_data|` after the final polish.
    pub rms_residual: T,
    /// Radius of the algebraic circle, in units of the data.
    pub radius: T,
    /// RMS distance of the delay-corrected points from that circle.
    pub scatter: T,
    /// Set when the radius is below five times the scatter.
    pub ill_conditioned: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> CircleFitResult<T> {
    pub fn params(&self) -> CircleParams<T> {
        CircleParams {
            f_r: self.f_r,
            q_l: self.q_l,
            q_c_mag: self.q_c_mag,
            phi: self.phi,
            a: self.a,
            alpha: self.alpha,
            tau: self.tau,
        }
    }
}

/// Algebraic circle fit (Taubin), returning centre and radius.
fn fit_circle<T: Real>(z: &[Complex<T>]) -> Option<(Complex<T>, T)> {
    let n = T::from_usize_lossy(z.len());
    let mean = z.iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b) / n;
    let scale = (z.iter().map(|p| (p - mean).norm_sqr()).sum::<T>() / n).sqrt();
    if !(scale > T::zero()) {
        return None;
    }
    let (mut mxx, mut myy, mut mxy, mut mxz, mut myz, mut mzz) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for p in z {
        let q = (p - mean) / scale;
        let (x, y) = (q.re, q.im);
        let zz = x * x + y * y;
        mxx = mxx + x * x;
        myy = myy + y * y;
        mxy = mxy + x * y;
        mxz = mxz + x * zz;
        myz = myz + y * zz;
        mzz = mzz + zz * zz;
    }
    let (mxx, myy, mxy, mxz, myz, mzz) = (mxx / n, myy / n, mxy / n, mxz / n, myz / n, mzz / n);
    let mz = mxx + myy;
    let cov_xy = mxx * myy - mxy * mxy;
    let var_z = mzz - mz * mz;
    let a3 = T::lit(4.0) * mz;
    let a2 = -T::lit(3.0) * mz * mz - mzz;
    let a1 = var_z * mz + T::lit(4.0) * cov_xy * mz - mxz * mxz - myz * myz;
    let a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;
    let (a22, a33) = (a2 + a2, a3 + a3 + a3);
    let mut x = T::zero();
    let mut y = T::lit(1e20);
    for _ in 0..100 {
        let y_old = y;
        y = a0 + x * (a1 + x * (a2 + x * a3));
        if y.abs() > y_old.abs() {
            x = T::zero();
            break;
        }
        let dy = a1 + x * (a22 + x * a33);
        let x_old = x;
        x = x_old - y / dy;
        if ((x - x_old) / x).abs() < T::eps() {
            break;
        }
        if x < T::zero() {
            x = T::zero();
            break;
        }
    }
    let det = x * x - x * mz + cov_xy;
    if det == T::zero() {
        return None;
    }
    let cx = (mxz * (myy - x) - myz * mxy) / det / T::lit(2.0);
    let cy = (myz * (mxx - x) - mxz * mxy) / det / T::lit(2.0);
    let r = (cx * cx + cy * cy + mz).sqrt();
    let centre = Complex::new(cx, cy) * scale + mean;
    (r.is_finite() && cx.is_finite() && cy.is_finite()).then_some((centre, r * scale))
}

fn circle_scatter<T: Real>(z: &[Complex<T>], centre: Complex<T>, r: T) -> T {
    (z.iter().map(|p| ((p - centre).norm() - r).powi(2)).sum::<T>() / T::from_usize_lossy(z.len())).sqrt()
}

fn remove_delay<T: Real>(trace: &S21Trace<T>, tau: T, f_ref: T) -> Vec<Complex<T>> {
    trace
        .frequencies
        .iter()
        .zip(&trace.s21)
        .map(|(&f, &z)| z * Complex::from_polar(T::one(), T::two_pi() * (f - f_ref) * tau))
        .collect()
}

fn unwrap<T: Real>(phases: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = T::zero();
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let d = p - phases[i - 1];
            if d > T::PI() {
                offset = offset - T::two_pi();
            } else if d < -T::PI() {
                offset = offset + T::two_pi();
            }
        }
        out.push(p + offset);
    }
    out
}

fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = (x + T::PI()) % two_pi;
    if y < T::zero() {
        y = y + two_pi;
    }
    y - T::PI()
}

/// Straight-line least squares, returning `(slope, intercept)`.
fn line_fit<T: Real>(xs: &[T], ys: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx = xs.iter().map(|&x| (x - mx) * (x - mx)).sum::<T>();
    let sxy = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum::<T>();
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    (slope, my - slope * mx)
}

/// Delay estimate: a straight-line fit to the unwrapped phase of the
/// outermost 20% of points on each side, refined by a scan and golden
/// section search minimising the circle scatter.
fn estimate_delay<T: Real>(trace: &S21Trace<T>, f_ref: T, span: T) -> T {
    let n = trace.frequencies.len();
    let edge = (n / 5).max(2);
    let phases = unwrap(&trace.s21.iter().map(|z| z.arg()).collect::<Vec<_>>());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in (0..edge).chain(n - edge..n) {
        xs.push(trace.frequencies[i] - f_ref);
        ys.push(phases[i]);
    }
    // the two wings are fitted with a common slope and separate offsets so
    // that the resonance phase jump between them does not bias the slope
    let (ml, mr) = (
        xs[..edge].iter().copied().sum::<T>() / T::from_usize_lossy(edge),
        xs[edge..].iter().copied().sum::<T>() / T::from_usize_lossy(edge),
    );
    let (pl, pr) = (
        ys[..edge].iter().copied().sum::<T>() / T::from_usize_lossy(edge),
        ys[edge..].iter().copied().sum::<T>() / T::from_usize_lossy(edge),
    );
    let centred_x: Vec<T> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| if i < edge { x - ml } else { x - mr })
        .collect();
    let centred_y: Vec<T> = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| if i < edge { y - pl } else { y - pr })
        .collect();
    let (slope, _) = line_fit(&centred_x, &centred_y);
    let tau0 = -slope / T::two_pi();

    // scatter normalised by the trace magnitude; dividing by the radius would
    // favour near-straight arcs with huge radii
    let level = (trace.s21.iter().map(|z| z.norm_sqr()).sum::<T>() / T::from_usize_lossy(n)).sqrt();
    let cost = |tau: T| -> T {
        let z = remove_delay(trace, tau, f_ref);
        match fit_circle(&z) {
            Some((c, r)) if r > T::zero() => circle_scatter(&z, c, r) / level,
            _ => T::infinity(),
        }
    };
    let width = T::one() / span;
    let steps = 40;
    let mut best = (tau0, cost(tau0));
    for i in 0..=steps {
        let t = tau0 - width + width * T::lit(2.0) * T::from_usize_lossy(i) / T::from_usize_lossy(steps);
        let c = cost(t);
        if c < best.1 {
            best = (t, c);
        }
    }
    let h = width * T::lit(2.0) / T::from_usize_lossy(steps);
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = T::lit(0.618_033_988_749_895);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut c1, mut c2) = (cost(x1), cost(x2));
    for _ in 0..80 {
        if c1 < c2 {
            hi = x2;
            x2 = x1;
            c2 = c1;
            x1 = hi - g * (hi - lo);
            c1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            c1 = c2;
            x2 = lo + g * (hi - lo);
            c2 = cost(x2);
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Staged circle fit:
///
/// 1. cable delay from the outer 20% of points on each side, refined on the
///    circle scatter;
/// 2. algebraic circle fit of the delay-corrected data;
/// 3. fit of `θ₀ + 2 arctan(2 Q_l (1 - f/f_r))` to the phase around the
///    circle centre, giving `f_r` and `Q_l`;
/// 4. the off-resonant point opposite `θ₀` gives `a` and `α`; the normalised
///    circle gives `Q_l/|Q_c|` and `φ` (diameter correction);
/// 5. `Q_i` from `1/Q_l = 1/Q_i + cos φ/|Q_c|`;
///
/// followed by a joint least-squares polish of all seven parameters against
/// the complex data.
pub fn circle_fit<T: Real>(trace: &S21Trace<T>) -> Result<CircleFitResult<T>> {
    trace.validate()?;
    let n = trace.frequencies.len();
    let f_lo = trace.frequencies[0];
    let f_hi = trace.frequencies[n - 1];
    let f_ref = (f_lo + f_hi) / T::lit(2.0);
    let span = f_hi - f_lo;
    let mut warnings = Vec::new();

    // 1-2: delay and circle
    let tau0 = estimate_delay(trace, f_ref, span);
    let z = remove_delay(trace, tau0, f_ref);
    let (centre, radius) =
        fit_circle(&z).ok_or_else(|| Error::NoResonance { swing: 0.0 })?;
    let scatter = circle_scatter(&z, centre, radius);
    // point-to-point noise estimate; a circle smaller than this is noise
    let noise = (z.windows(2).map(|w| (w[1] - w[0]).norm_sqr()).sum::<T>()
        / T::from_usize_lossy(2 * (n - 1)))
    .sqrt();
    if radius < T::lit(2.0) * noise {
        return Err(Error::NoResonance { swing: 0.0 });
    }

    // 3: phase around the centre
    let theta = unwrap(&z.iter().map(|p| (p - centre).arg()).collect::<Vec<_>>());
    let th_max = theta.iter().copied().fold(T::neg_infinity(), T::max);
    let th_min = theta.iter().copied().fold(T::infinity(), T::min);
    let swing = th_max - th_min;
    if swing < T::FRAC_PI_2() {
        return Err(Error::NoResonance {
            swing: swing.to_f64_lossy(),
        });
    }
    let decreasing = theta[n - 1] < theta[0];
    let (th_first, th_last) = (theta[0], theta[n - 1]);
    let mid = (th_first + th_last) / T::lit(2.0);
    let crossing = |level: T| -> T {
        for i in 1..n {
            let (a, b) = (theta[i - 1], theta[i]);
            if (a - level) * (b - level) <= T::zero() && a != b {
                let w = (level - a) / (b - a);
                return trace.frequencies[i - 1] + w * (trace.frequencies[i] - trace.frequencies[i - 1]);
            }
        }
        f_ref
    };
    let fr0 = crossing(mid);
    let sign = if decreasing { T::one() } else { -T::one() };
    let f_a = crossing(mid + sign * T::FRAC_PI_2());
    let f_b = crossing(mid - sign * T::FRAC_PI_2());
    let lw0 = (f_b - f_a).abs().max(span / T::lit(1e3)).min(span);
    let ql0 = fr0 / lw0;
    let phase_res = |q: &[T]| -> Option<Vec<T>> {
        let (th0, fr, ql) = (q[0], f_ref + q[1] * lw0, q[2].exp());
        Some(
            trace
                .frequencies
                .iter()
                .zip(&theta)
                .map(|(&f, &t)| th0 + T::lit(2.0) * (T::lit(2.0) * ql * (fr - f) / fr).atan() - t)
                .collect(),
        )
    };
    let ph = levenberg_marquardt(
        "circle-fit phase stage",
        phase_res,
        &[mid, (fr0 - f_ref) / lw0, ql0.ln()],
        &LmOptions::default(),
    )?;
    let theta0 = ph.params[0];
    let f_r1 = f_ref + ph.params[1] * lw0;
    let q_l1 = ph.params[2].exp();

    // 4: off-resonant point and diameter correction
    let off = centre - Complex::from_polar(radius, theta0);
    let a1 = off.norm();
    let alpha_ref = off.arg();
    let centre_n = centre / off;
    let r_n = radius / a1;
    let q_c1 = q_l1 / (T::lit(2.0) * r_n);
    let phi1 = (Complex::new(T::one(), T::zero()) - centre_n).arg();

    // joint polish on scaled parameters
    let lw = f_r1 / q_l1;
    let tau_scale = T::one() / span;
    let x0 = [
        a1.ln(),
        alpha_ref,
        tau0 / tau_scale,
        (f_r1 - f_ref) / lw,
        q_l1.ln(),
        q_c1.ln(),
        phi1,
    ];
    let unpack = |q: &[T]| -> (T, T, T, T, T, T, T) {
        (
            q[0].exp(),
            q[1],
            q[2] * tau_scale,
            f_ref + q[3] * lw,
            q[4].exp(),
            q[5].exp(),
            q[6],
        )
    };
    let full_res = |q: &[T]| -> Option<Vec<T>> {
        let (a, alpha_r, tau, f_r, q_l, q_c, phi) = unpack(q);
        let k = Complex::from_polar(q_l / q_c, phi);
        let mut out = Vec::with_capacity(2 * n);
        for (&f, &d) in trace.frequencies.iter().zip(&trace.s21) {
            let df = f - f_ref;
            let env = Complex::from_polar(a, alpha_r - T::two_pi() * df * tau);
            let x = (df - (f_r - f_ref)) / f_r;
            let m = env * (Complex::new(T::one(), T::zero()) - k / Complex::new(T::one(), T::lit(2.0) * q_l * x));
            let r = (m - d) / a1;
            out.push(r.re);
            out.push(r.im);
        }
        Some(out)
    };
    let opts = LmOptions {
        max_iterations: 1000,
        ..LmOptions::default()
    };
    let polish = levenberg_marquardt("circle-fit polish", full_res, &x0, &opts)?;
    let (a, alpha_r, tau, f_r, q_l, q_c_mag, phi) = unpack(&polish.params);
    let alpha = wrap_angle(alpha_r + T::two_pi() * f_ref * tau);
    let phi = wrap_angle(phi);
    let rms_residual = (polish.cost * T::lit(2.0) / T::from_usize_lossy(n)).sqrt() * a1;
    let q_i = qi_from_ql(q_l, q_c_mag, phi)?;

    let ill_conditioned = radius < T::lit(5.0) * scatter;
    if ill_conditioned {
        warnings.push(format!(
            "circle radius {radius} is less than five times the point scatter {scatter}"
        ));
    }
    if span < T::lit(5.0) * f_r / q_l {
        warnings.push("trace spans fewer than five loaded linewidths".to_string());
    }
    let inside = f_r >= f_lo && f_r <= f_hi;
    if !inside {
        warnings.push("fitted resonance lies outside the measured span".to_string());
    }
    Ok(CircleFitResult {
        f_r,
        q_l,
        q_c_mag,
        q_i,
        phi,
        a,
        alpha,
        tau,
        rms_residual,
        radius,
        scatter,
        ill_conditioned,
        warnings,
    })
}
