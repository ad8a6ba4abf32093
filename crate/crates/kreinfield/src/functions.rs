//! Scalar functions admitted by the smooth functional calculus: named
//! built-ins with closed-form derivative stacks, and inverse Fourier
//! transforms of sampled time windows (whose derivatives come from the
//! same quadrature with (it)^r weights). No arbitrary code execution:
//! scenarios can only name these.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A smooth complex-valued function of a real variable together with as
/// many derivatives as the almost-analytic extension needs.
pub trait SmoothFunction: Sync {
    /// Returns [f(x), f'(x), ..., f^(max_order)(x)].
    fn derivatives(&self, x: f64, max_order: usize) -> Vec<Complex64>;

    /// Interval outside of which |f| and every derivative used are
    /// below `tiny` times the function's scale.
    fn support(&self, tiny: f64) -> (f64, f64);

    /// True when the function (and hence all derivatives) is real
    /// valued; enables the conjugate-symmetric resolvent path.
    fn is_real(&self) -> bool {
        false
    }

    fn value(&self, x: f64) -> Complex64 {
        self.derivatives(x, 0)[0]
    }
}

/// Built-in function shapes nameable from scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NamedFunction {
    /// a * exp(-((x-c)/w)^2)
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// a * sech^2((x-c)/w)
    Sech2 { amplitude: f64, center: f64, width: f64 },
    /// a * cos^2(pi (x-c) / (2 w)) on |x-c| <= w, zero outside
    RaisedCosine { amplitude: f64, center: f64, half_width: f64 },
}

impl NamedFunction {
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        NamedFunction::Gaussian { amplitude, center, width }
    }
}

impl SmoothFunction for NamedFunction {
    fn derivatives(&self, x: f64, max_order: usize) -> Vec<Complex64> {
        match *self {
            NamedFunction::Gaussian { amplitude, center, width } => {
                let u = (x - center) / width;
                let e = amplitude * (-u * u).exp();
                // d^r/dx^r e^{-u^2} = (-1/w)^r H_r(u) e^{-u^2}
                let mut h_prev = 0.0;
                let mut h = 1.0;
                let mut out = Vec::with_capacity(max_order + 1);
                for r in 0..=max_order {
                    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                    out.push(Complex64::new(sign * h * e / width.powi(r as i32), 0.0));
                    let h_next = 2.0 * u * h - 2.0 * r as f64 * h_prev;
                    h_prev = h;
                    h = h_next;
                }
                out
            }
            NamedFunction::Sech2 { amplitude, center, width } => {
                let u = (x - center) / width;
                let t = u.tanh();
                let s = amplitude / (u.cosh() * u.cosh());
                // (d/du)^r sech^2 = sech^2 * Q_r(tanh),
                // Q_{r+1} = -2 T Q_r + (1 - T^2) Q_r'
                let mut q = vec![1.0f64]; // polynomial in T, ascending
                let mut out = Vec::with_capacity(max_order + 1);
                for r in 0..=max_order {
                    let qt = q.iter().rev().fold(0.0, |acc, &c| acc * t + c);
                    out.push(Complex64::new(s * qt / width.powi(r as i32), 0.0));
                    let mut next = vec![0.0; q.len() + 2];
                    for (i, &c) in q.iter().enumerate() {
                        next[i + 1] -= 2.0 * c; // -2T Q
                        if i >= 1 {
                            let dc = c * i as f64; // Q' coefficient at i-1
                            next[i - 1] += dc;
                            next[i + 1] -= dc; // -T^2 Q'
                        }
                    }
                    q = next;
                }
                out
            }
            NamedFunction::RaisedCosine { amplitude, center, half_width } => {
                let u = (x - center) / half_width;
                let mut out = vec![Complex64::new(0.0, 0.0); max_order + 1];
                if u.abs() < 1.0 {
                    // a(1 + cos(pi u))/2; derivatives rotate the cosine.
                    let k = std::f64::consts::PI / half_width;
                    out[0] = Complex64::new(
                        amplitude * 0.5 * (1.0 + (std::f64::consts::PI * u).cos()),
                        0.0,
                    );
                    for (r, slot) in out.iter_mut().enumerate().skip(1) {
                        let phase = std::f64::consts::PI * u
                            + r as f64 * std::f64::consts::FRAC_PI_2;
                        *slot = Complex64::new(
                            amplitude * 0.5 * k.powi(r as i32) * phase.cos(),
                            0.0,
                        );
                    }
                }
                out
            }
        }
    }

    fn is_real(&self) -> bool {
        true
    }

    fn support(&self, tiny: f64) -> (f64, f64) {
        match *self {
            NamedFunction::Gaussian { amplitude, center, width } => {
                let r = width * (amplitude.abs().max(1.0) / tiny).ln().max(1.0).sqrt();
                (center - r, center + r)
            }
            NamedFunction::Sech2 { amplitude, center, width } => {
                // sech^2(u) ~ 4 exp(-2|u|)
                let r = width * 0.5 * (4.0 * amplitude.abs().max(1.0) / tiny).ln().max(1.0);
                (center - r, center + r)
            }
            NamedFunction::RaisedCosine { center, half_width, .. } => {
                (center - half_width, center + half_width)
            }
        }
    }
}

/// Uniform time grid carrying samples of a real window function f(t);
/// trapezoid weights. The shipped window shape is the raised cosine
/// (Hann), which vanishes with its first derivative at the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub times: Vec<f64>,
    pub samples: Vec<f64>,
}

impl TimeWindow {
    /// Hann window on [-t_max, t_max] with n samples (n >= 2).
    pub fn raised_cosine(t_max: f64, n: usize) -> Self {
        let dt = 2.0 * t_max / (n - 1) as f64;
        let times: Vec<f64> = (0..n).map(|k| -t_max + k as f64 * dt).collect();
        let samples = times
            .iter()
            .map(|&t| {
                let u = t / t_max;
                if u.abs() < 1.0 {
                    0.5 * (1.0 + (std::f64::consts::PI * u).cos())
                } else {
                    0.0
                }
            })
            .collect();
        Self { times, samples }
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Trapezoid weights (ends halved).
    pub fn weights(&self) -> Vec<f64> {
        let n = self.times.len();
        let dt = self.dt();
        (0..n)
            .map(|k| if k == 0 || k == n - 1 { 0.5 * dt } else { dt })
            .collect()
    }
}

/// g(x) = (1/sqrt(2 pi)) integral f(t) e^{i x t} dt for a sampled window
/// f: the inverse Fourier transform entering the group/calculus
/// identity. Derivatives insert (it)^r under the integral.
#[derive(Debug, Clone)]
pub struct InverseFourierOfWindow {
    pub window: TimeWindow,
    weights: Vec<f64>,
    symmetric: bool,
}

impl InverseFourierOfWindow {
    pub fn new(window: TimeWindow) -> Self {
        let weights = window.weights();
        // An even window has a real inverse Fourier transform.
        let n = window.samples.len();
        let symmetric = (0..n).all(|k| {
            (window.samples[k] - window.samples[n - 1 - k]).abs() < 1e-14
                && (window.times[k] + window.times[n - 1 - k]).abs() < 1e-12
        });
        Self {
            window,
            weights,
            symmetric,
        }
    }
}

impl SmoothFunction for InverseFourierOfWindow {
    fn derivatives(&self, x: f64, max_order: usize) -> Vec<Complex64> {
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let mut out = vec![Complex64::new(0.0, 0.0); max_order + 1];
        for ((&t, &f), &w) in self
            .window
            .times
            .iter()
            .zip(&self.window.samples)
            .zip(&self.weights)
        {
            if f == 0.0 {
                continue;
            }
            let phase = Complex64::from_polar(1.0, x * t);
            let mut factor = Complex64::new(w * f * norm, 0.0) * phase;
            for slot in out.iter_mut() {
                *slot += factor;
                factor *= Complex64::new(0.0, t);
            }
        }
        out
    }

    fn is_real(&self) -> bool {
        self.symmetric
    }

    fn support(&self, tiny: f64) -> (f64, f64) {
        // Polynomial decay: scan outward until |g| stays below tiny*scale
        // for a full oscillation period.
        let t_max = self
            .window
            .times
            .iter()
            .fold(0.0f64, |m, &t| m.max(t.abs()))
            .max(1e-12);
        let period = 2.0 * std::f64::consts::PI / t_max;
        let scale = self.value(0.0).norm().max(1e-300);
        let step = period / 8.0;
        let mut x = period;
        let cap = 4000.0 * period;
        'outer: while x < cap {
            let mut all_small = true;
            let mut probe = x;
            while probe < x + period {
                if self.value(probe).norm() > tiny * scale {
                    all_small = false;
                    break;
                }
                probe += step;
            }
            if all_small {
                break 'outer;
            }
            x += period;
        }
        (-x, x)
    }
}

/// The canonical C-infinity bump: 1 on |s| <= 1/2, 0 on |s| >= 1, glued
/// by the exponential spline phi(u) = exp(-1/u).
pub fn bump(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let t = 2.0 * a - 1.0; // in (0, 1)
        let phi = |u: f64| (-1.0 / u).exp();
        phi(1.0 - t) / (phi(1.0 - t) + phi(t))
    }
}

/// Derivative of the bump.
pub fn bump_derivative(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 || a >= 1.0 {
        return 0.0;
    }
    let t = 2.0 * a - 1.0;
    let phi = |u: f64| (-1.0 / u).exp();
    let dphi = |u: f64| (-1.0 / u).exp() / (u * u);
    let num = phi(1.0 - t);
    let den = phi(1.0 - t) + phi(t);
    // d/dt [phi(1-t)/den]
    let dnum = -dphi(1.0 - t);
    let dden = -dphi(1.0 - t) + dphi(t);
    let g = (dnum * den - num * dden) / (den * den);
    2.0 * g * s.signum()
}
