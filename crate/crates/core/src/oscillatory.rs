//! Oscillatory weights and integrals: `e(x) = exp(2 pi i x)`, reduction of
//! the phase `t n^c` modulo 1, the sawtooth `psi(x) = {x} - 1/2`, Vaaler's
//! trigonometric approximation of `psi`, the main-term integral
//! `∫ e(t y^c) dy` and the prime sum `Σ e(t p^c) log p`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
// unused when std float methods are linked in
#[allow(unused_imports)]
use num_traits::Float;

use crate::arith::PrimeTable;
use crate::ddouble::DoubleDouble;
use crate::error::{param, resource, Result};
use crate::sum::ComplexKahanSum;

/// Below this magnitude `t * y^c` is evaluated in plain `f64`; the absolute
/// error then stays under ~1e-12.
pub const PHASE_FAST_LIMIT: f64 = 4096.0;

/// Largest `|t| * y^c` the double-double path reduces to 1e-10.
pub const PHASE_BUDGET: f64 = 1_152_921_504_606_846_976.0; // 2^60

/// Largest number of periods `main_term_integral` will resolve.
pub const MAX_OSCILLATIONS: f64 = 1e9;

/// Panels used even for a non-oscillating integrand.
pub const MIN_PANELS: usize = 16;

/// Mathematical fractional part, in `[0, 1)`.
pub fn fractional_part(x: f64) -> f64 {
    let f = x - x.floor();
    // -tiny rounds to 1.0
    if f >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        f
    }
}

/// `e(f)` for `f` already reduced to `[0, 1)` (or any small value).
///
/// Splits off the nearest quarter turn so the trig calls only see
/// `|angle| <= pi/4`; quarter turns come out exact.
#[inline]
pub(crate) fn unit_exp_reduced(f: f64) -> Complex64 {
    let quarter = (4.0 * f).round();
    let r = f - quarter / 4.0;
    let (s, c) = libm::sincos(TAU * r);
    match (quarter as i64).rem_euclid(4) {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// `e(m / l)` from the exact fraction.
pub fn unit_exp_of_fraction(m: u64, l: u64) -> Complex64 {
    let m = m % l;
    // center in (-1/2, 1/2] before dividing
    let centered = if 2 * m > l { m as f64 - l as f64 } else { m as f64 };
    unit_exp_reduced(centered / l as f64)
}

/// `e(x) = exp(2 pi i x)`, reducing `x` modulo 1 first.
pub fn unit_exp(x: f64) -> Result<Complex64> {
    if !x.is_finite() {
        return param(format!("e(x) needs a finite argument, got {x}"));
    }
    Ok(unit_exp_reduced(fractional_part(x)))
}

/// `frac(t * n^c)` with absolute error at most 1e-10.
pub fn reduced_phase(t: f64, n: u64, c: f64) -> Result<f64> {
    if n == 0 {
        return param("reduced_phase needs n >= 1");
    }
    reduced_phase_real(t, n as f64, c)
}

/// `frac(t * y^c)` for real `y > 0`.
pub fn reduced_phase_real(t: f64, y: f64, c: f64) -> Result<f64> {
    if !(t.is_finite() && y.is_finite() && c.is_finite()) || y <= 0.0 {
        return param(format!("phase t * y^c needs finite t, c and y > 0 (t = {t}, y = {y}, c = {c})"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let power = y.powf(c);
    let magnitude = t.abs() * power;
    if magnitude <= PHASE_FAST_LIMIT {
        return Ok(fractional_part(t * power));
    }
    if magnitude > PHASE_BUDGET {
        return resource(format!("|t| * y^c = {magnitude:e} exceeds the extended-precision budget {PHASE_BUDGET:e}"));
    }
    let v = DoubleDouble::from_f64(y).ln().mul_f64(c).exp().mul_f64(t);
    Ok(v.frac())
}

/// `psi(x) = {x} - 1/2`, in `[-1/2, 1/2)`.
pub fn saw_psi(x: f64) -> f64 {
    fractional_part(x) - 0.5
}

/// Coefficients of Vaaler's approximation of `psi` of length `H`.
///
/// `a(h) = -(2 pi i h)^-1 J(h / (H + 1))` with
/// `J(u) = pi u (1 - |u|) cot(pi u) + |u|`, and the majorant coefficients
/// `b(h) = (2H + 2)^-1 (1 - |h| / (H + 1))` (a scaled Fejér kernel).
#[derive(Debug, Clone, PartialEq)]
pub struct VaalerExpansion {
    h_max: u32,
    // a(h) for h = 1..=H
    a: Vec<Complex64>,
    // b(h) for h = 0..=H
    b: Vec<f64>,
}

fn vaaler_kernel(u: f64) -> f64 {
    let au = u.abs();
    PI * u * (1.0 - au) / (PI * u).tan() + au
}

pub fn vaaler_expansion(h_max: u32) -> Result<VaalerExpansion> {
    if h_max == 0 {
        return param("Vaaler expansion needs H >= 1");
    }
    let scale = f64::from(h_max) + 1.0;
    let a = (1..=h_max)
        .map(|h| {
            let h = f64::from(h);
            Complex64::new(0.0, vaaler_kernel(h / scale) / (TAU * h))
        })
        .collect();
    let b = (0..=h_max).map(|h| (1.0 - f64::from(h) / scale) / (2.0 * scale)).collect();
    Ok(VaalerExpansion { h_max, a, b })
}

impl VaalerExpansion {
    pub fn h_max(&self) -> u32 {
        self.h_max
    }

    /// `a(h)` for `1 <= |h| <= H`; `a(-h) = conj(a(h))`.
    pub fn a(&self, h: i64) -> Complex64 {
        let k = h.unsigned_abs() as usize;
        assert!(k >= 1 && k <= self.h_max as usize, "a(h) is defined for 1 <= |h| <= H");
        let v = self.a[k - 1];
        if h < 0 {
            v.conj()
        } else {
            v
        }
    }

    /// `b(h)` for `|h| <= H`; even in `h`.
    pub fn b(&self, h: i64) -> f64 {
        let k = h.unsigned_abs() as usize;
        assert!(k <= self.h_max as usize, "b(h) is defined for |h| <= H");
        self.b[k]
    }
}

/// `(Re Σ a(h) e(hx), Re Σ b(h) e(hx))` over `1 <= |h| <= H` and `|h| <= H`.
///
/// The majorant is nonnegative and `|psi(x) - approx| <= majorant`.
pub fn vaaler_eval(x: f64, expansion: &VaalerExpansion) -> (f64, f64) {
    let f = fractional_part(x);
    let mut approx = 0.0;
    let mut majorant = expansion.b[0];
    for (i, (a, b)) in expansion.a.iter().zip(&expansion.b[1..]).enumerate() {
        let h = (i + 1) as f64;
        let e = unit_exp_reduced(fractional_part(h * f));
        // h and -h together contribute 2 Re(.)
        approx += 2.0 * (a * e).re;
        majorant += 2.0 * b * e.re;
    }
    (approx, majorant)
}

/// Parameters of the weight `e(t n^c)` on `(mu X, X]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpWeightParams {
    c: f64,
    t: f64,
    mu: f64,
    x: f64,
}

impl ExpWeightParams {
    pub fn new(c: f64, t: f64, mu: f64, x: f64) -> Result<Self> {
        validate_exponent(c)?;
        if !t.is_finite() {
            return param(format!("t = {t} must be finite"));
        }
        if !(mu > 0.0 && mu < 1.0) {
            return param(format!("mu = {mu} must lie strictly between 0 and 1"));
        }
        if !(x.is_finite() && x >= 2.0) {
            return param(format!("X = {x} must be at least 2"));
        }
        Ok(Self { c, t, mu, x })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// `1 < c < 3`, `c != 2`.
pub fn validate_exponent(c: f64) -> Result<()> {
    if !(c > 1.0 && c < 3.0) || c == 2.0 {
        return param(format!("c = {c} must satisfy 1 < c < 3 and c != 2"));
    }
    Ok(())
}

const GAUSS_POINTS: usize = 15;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut nodes = [0.0; N];
    let mut weights = [0.0; N];
    let n = N as f64;
    for i in 0..N {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..N {
                let k = k as f64;
                let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            deriv = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
    }
    (nodes, weights)
}

/// `∫_a^b e(t y^c) dy` for `0 <= a <= b`.
///
/// Panels are equally spaced in `y^c`, one period of the phase per panel at
/// most (15 Gauss–Legendre nodes per period), with at least [`MIN_PANELS`].
pub fn oscillatory_integral(t: f64, c: f64, a: f64, b: f64) -> Result<Complex64> {
    oscillatory_integral_with_min_panels(t, c, a, b, MIN_PANELS)
}

pub(crate) fn oscillatory_integral_with_min_panels(
    t: f64,
    c: f64,
    a: f64,
    b: f64,
    min_panels: usize,
) -> Result<Complex64> {
    if !(t.is_finite() && c.is_finite() && c > 0.0 && a.is_finite() && b.is_finite()) || a < 0.0 || b < a {
        return param(format!("integral needs finite t, c > 0 and 0 <= a <= b (a = {a}, b = {b})"));
    }
    if t == 0.0 || a == b {
        return Ok(Complex64::new(b - a, 0.0));
    }
    let (ua, ub) = (a.powf(c), b.powf(c));
    let periods = t.abs() * (ub - ua);
    if periods > MAX_OSCILLATIONS {
        return resource(format!("integrand has {periods:e} periods, above the limit {MAX_OSCILLATIONS:e}"));
    }
    let panels = min_panels.max(periods.ceil() as usize);
    let (nodes, weights) = gauss_legendre::<GAUSS_POINTS>();

    let mut acc = ComplexKahanSum::new();
    let panel = |lo: f64, hi: f64, acc: &mut ComplexKahanSum| -> Result<()> {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in nodes.iter().zip(&weights) {
            let y = mid + half * x;
            let phase = reduced_phase_real(t, y, c)?;
            acc.add(unit_exp_reduced(phase) * (w * half));
        }
        Ok(())
    };

    let du = (ub - ua) / panels as f64;
    let mut lo = a;
    for i in 1..=panels {
        let hi = if i == panels { b } else { (ua + du * i as f64).powf(1.0 / c) };
        if lo == 0.0 {
            // y^c is not smooth at 0: grade the first panel geometrically.
            let mut right = hi;
            for _ in 0..60 {
                let left = right / 2.0;
                panel(left, right, &mut acc)?;
                right = left;
            }
            acc.add(Complex64::new(right, 0.0));
        } else {
            panel(lo, hi, &mut acc)?;
        }
        lo = hi;
    }
    Ok(acc.value())
}

/// `∫_{mu X}^{X} e(t y^c) dy`.
pub fn main_term_integral(params: &ExpWeightParams) -> Result<Complex64> {
    oscillatory_integral(params.t, params.c, params.mu * params.x, params.x)
}

/// `Σ_{mu X < p <= X} e(t p^c) log p`, ascending in `p`.
pub fn prime_exp_sum(params: &ExpWeightParams, primes: &PrimeTable) -> Result<Complex64> {
    let hi = params.x.floor() as u64;
    if primes.limit() < hi {
        return param(format!("prime table up to {} does not cover X = {}", primes.limit(), params.x));
    }
    let lo = (params.mu * params.x).floor() as u64;
    let mut acc = ComplexKahanSum::new();
    for &p in primes.primes_in(lo, hi) {
        let phase = reduced_phase(params.t, u64::from(p), params.c)?;
        acc.add(unit_exp_reduced(phase) * f64::from(p).ln());
    }
    Ok(acc.value())
}
