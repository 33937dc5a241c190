//! Piatetski-Shapiro numbers.
//!
//! Membership of `n` is decided by the indicator `[-n^g] - [-(n+1)^g]`, with
//! `[.]` the mathematical floor. It equals `ceil((n+1)^g) - ceil(n^g)`, which
//! is 1 exactly when some integer `k` satisfies `n^g <= k < (n+1)^g`, i.e.
//! `n = [k^(1/g)]`. For `g = 1/2` the members are the perfect squares.
//!
//! Values of `n^g` are computed in `f64`. When one lands within the guard
//! band of an integer the decision is redone exactly (big-integer
//! comparisons of `n^u` against `k^v` when `g = u/v`) or, without a rational
//! form, in fixed-point arithmetic at `high_precision_digits` digits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
// unused when std float methods are linked in
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::ToPrimitive;

use crate::arith::PrimeTable;
use crate::error::{param, Result};
use crate::hiprec;

/// Largest denominator kept on the exact big-integer path.
pub const MAX_EXACT_DENOMINATOR: u32 = 100_000;

pub const DEFAULT_GUARD_EPSILON: f64 = 1e-9;
pub const DEFAULT_HIGH_PRECISION_DIGITS: u32 = 50;

/// `num / den` in lowest terms with `0 < num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExactGamma {
    num: u32,
    den: u32,
}

impl ExactGamma {
    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsConfig {
    gamma: f64,
    exact: Option<ExactGamma>,
    guard_epsilon: f64,
    high_precision_digits: u32,
}

impl PsConfig {
    /// `gamma = num / den`, reduced to lowest terms.
    pub fn rational(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return param(format!("gamma = {num}/{den} must lie strictly between 0 and 1"));
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        let gamma = f64::from(num) / f64::from(den);
        let exact = (den <= MAX_EXACT_DENOMINATOR).then_some(ExactGamma { num, den });
        Ok(Self::with_parts(gamma, exact))
    }

    /// A gamma with no exact rational form; near-integer decisions fall back
    /// to fixed-point evaluation.
    pub fn from_f64(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return param(format!("gamma = {gamma} must lie strictly between 0 and 1"));
        }
        Ok(Self::with_parts(gamma, None))
    }

    /// Accepts `u/v` or a plain decimal such as `0.86`; both are kept exact.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((u, v)) = text.split_once('/') {
            let parse = |s: &str| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| crate::Error::Parameter(format!("gamma '{text}' is not of the form u/v")))
            };
            return Self::rational(parse(u)?, parse(v)?);
        }
        let value: f64 =
            text.parse().map_err(|_| crate::Error::Parameter(format!("gamma '{text}' is not a number")))?;
        if !(value > 0.0 && value < 1.0) {
            return param(format!("gamma = {text} must lie strictly between 0 and 1"));
        }
        if let Some((int, frac)) = text.split_once('.') {
            let int_ok = int.is_empty() || int.chars().all(|c| c == '0');
            if int_ok && !frac.is_empty() && frac.len() <= 9 && frac.chars().all(|c| c.is_ascii_digit()) {
                let den = 10u32.pow(frac.len() as u32);
                let num: u32 = frac.parse().expect("checked digits");
                let g = num.gcd(&den);
                if den / g <= MAX_EXACT_DENOMINATOR {
                    return Self::rational(num, den);
                }
            }
        }
        Self::from_f64(value)
    }

    fn with_parts(gamma: f64, exact: Option<ExactGamma>) -> Self {
        Self {
            gamma,
            exact,
            guard_epsilon: DEFAULT_GUARD_EPSILON,
            high_precision_digits: DEFAULT_HIGH_PRECISION_DIGITS,
        }
    }

    pub fn with_guard_epsilon(mut self, eps: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eps) {
            return param(format!("guard epsilon {eps} must lie in [0, 0.5)"));
        }
        self.guard_epsilon = eps;
        Ok(self)
    }

    pub fn with_high_precision_digits(mut self, digits: u32) -> Result<Self> {
        if !(20..=10_000).contains(&digits) {
            return param(format!("high precision digits {digits} must lie in [20, 10000]"));
        }
        self.high_precision_digits = digits;
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn exact(&self) -> Option<ExactGamma> {
        self.exact
    }

    pub fn guard_epsilon(&self) -> f64 {
        self.guard_epsilon
    }

    pub fn high_precision_digits(&self) -> u32 {
        self.high_precision_digits
    }

    /// Text form that [`PsConfig::parse`] reads back to the same value.
    pub fn to_text(&self) -> String {
        format!("{self}")
    }

    fn near_integer(&self, x: f64) -> bool {
        let guard = self.guard_epsilon.max(16.0 * x.abs() * f64::EPSILON);
        (x - x.round()).abs() <= guard
    }
}

impl fmt::Display for PsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(g) => write!(f, "{}/{}", g.num, g.den),
            None => write!(f, "{:?}", self.gamma),
        }
    }
}

/// `[-n^g] - [-(n+1)^g]`: 1 when `n` is a Piatetski-Shapiro number, else 0.
pub fn ps_indicator(n: u64, cfg: &PsConfig) -> u8 {
    if n == 0 {
        // ceil(1) - ceil(0)
        return 1;
    }
    let a = (n as f64).powf(cfg.gamma);
    let b = ((n + 1) as f64).powf(cfg.gamma);
    if !cfg.near_integer(a) && !cfg.near_integer(b) {
        return (b.ceil() - a.ceil()) as u8;
    }
    match cfg.exact {
        Some(g) => exact_indicator(n, g),
        None => high_precision_indicator(n, cfg),
    }
}

fn big_pow(x: u64, e: u32) -> BigUint {
    BigUint::from(x).pow(e)
}

/// Largest `k` with `k^den <= m^num`.
fn exact_floor_pow(m: u64, g: ExactGamma) -> u64 {
    let target = big_pow(m, g.num);
    let mut k = (m as f64).powf(f64::from(g.num) / f64::from(g.den)).floor() as u64;
    while k > 0 && big_pow(k, g.den) > target {
        k -= 1;
    }
    while big_pow(k + 1, g.den) <= target {
        k += 1;
    }
    k
}

/// Is there a `k` with `n^num <= k^den < (n+1)^num`?
fn exact_indicator(n: u64, g: ExactGamma) -> u8 {
    // smallest k with k^den >= n^num
    let mut k = exact_floor_pow(n, g);
    if big_pow(k, g.den) < big_pow(n, g.num) {
        k += 1;
    }
    u8::from(big_pow(k, g.den) < big_pow(n + 1, g.num))
}

/// `ceil(x)`, where values within `10^-digits` of an integer count as
/// that integer.
fn hp_ceil(x: &hiprec::Fixed, digits: u32) -> i128 {
    if on_integer(x, digits) {
        x.round().to_i128().expect("value fits")
    } else {
        x.floor().to_i128().expect("value fits") + 1
    }
}

/// `floor(x)`, with the same snapping as [`hp_ceil`].
fn hp_floor(x: &hiprec::Fixed, digits: u32) -> i128 {
    if on_integer(x, digits) {
        x.round().to_i128().expect("value fits")
    } else {
        x.floor().to_i128().expect("value fits")
    }
}

fn on_integer(x: &hiprec::Fixed, digits: u32) -> bool {
    x.distance_to_integer() <= 10f64.powi(-(digits as i32))
}

fn high_precision_indicator(n: u64, cfg: &PsConfig) -> u8 {
    let digits = cfg.high_precision_digits;
    let a = hiprec::pow_u64(n, cfg.gamma, digits);
    let b = hiprec::pow_u64(n + 1, cfg.gamma, digits);
    (hp_ceil(&b, digits) - hp_ceil(&a, digits)) as u8
}

/// The Piatetski-Shapiro number generated by `k >= 1`: `[k^(1/g)]`.
pub fn ps_generator_term(k: u64, cfg: &PsConfig) -> u64 {
    let y = (k as f64).powf(1.0 / cfg.gamma);
    if !cfg.near_integer(y) {
        return y.floor() as u64;
    }
    match cfg.exact {
        Some(g) => {
            // largest n with n^num <= k^den
            let target = big_pow(k, g.den);
            let mut n = y.round() as u64;
            while n > 0 && big_pow(n, g.num) > target {
                n -= 1;
            }
            while big_pow(n + 1, g.num) <= target {
                n += 1;
            }
            n
        }
        None => {
            let digits = cfg.high_precision_digits;
            let v = hiprec::root_pow_u64(k, cfg.gamma, digits);
            hp_floor(&v, digits) as u64
        }
    }
}

/// All `n` in `[lo, hi]` with [`ps_indicator`] equal to 1, ascending,
/// produced by stepping through the generators `k`.
pub fn enumerate_ps(lo: u64, hi: u64, cfg: &PsConfig) -> Result<Vec<u64>> {
    if lo == 0 || lo > hi {
        return param(format!("enumeration range [{lo}, {hi}] must satisfy 1 <= lo <= hi"));
    }
    // [k^(1/g)] >= lo needs k >= lo^g; start a little below
    let mut k = ((lo as f64).powf(cfg.gamma).floor() as u64).saturating_sub(1).max(1);
    let mut out = Vec::new();
    loop {
        let n = ps_generator_term(k, cfg);
        if n > hi {
            break;
        }
        if n >= lo {
            out.push(n);
        }
        k += 1;
    }
    Ok(out)
}

/// `X^g / log X`, the main term of the Piatetski-Shapiro prime count.
pub fn ps_count_main_term(x: f64, cfg: &PsConfig) -> Result<f64> {
    if !x.is_finite() || x <= 1.0 {
        return param(format!("X = {x} must be finite and greater than 1"));
    }
    Ok(x.powf(cfg.gamma) / x.ln())
}

/// Number of primes `p <= x` that are Piatetski-Shapiro numbers, by the
/// generator route.
pub fn ps_prime_count(x: u64, cfg: &PsConfig, primes: &PrimeTable) -> Result<u64> {
    if primes.limit() < x {
        return param(format!("prime table up to {} does not cover {x}", primes.limit()));
    }
    Ok(enumerate_ps(1, x.max(1), cfg)?.into_iter().filter(|&n| primes.is_prime(n)).count() as u64)
}
