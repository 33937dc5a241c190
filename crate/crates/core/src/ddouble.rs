//! Double-double arithmetic (about 106 significant bits), just enough to
//! evaluate `t * y^c` far past the point where plain `f64` loses every
//! fractional bit.

use core::ops::{Add, Mul, Neg, Sub};

// unused when std float methods are linked in
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DoubleDouble = DoubleDouble { hi: core::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, libm::fma(a, b, -p))
}

impl DoubleDouble {
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - Self::from_f64(b).mul_f64(q1);
        let q2 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }
    }

    fn ldexp(self, k: i32) -> Self {
        Self { hi: libm::ldexp(self.hi, k), lo: libm::ldexp(self.lo, k) }
    }

    /// `e^self`; the caller keeps the argument below ~709.
    pub fn exp(self) -> Self {
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-SQUARINGS);
        // e^r - 1 by Taylor; |r| < 3.4e-4
        let mut term = r;
        let mut s = r;
        for n in 2..=12 {
            term = (term * r).div_f64(n as f64);
            s = s + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // (1 + s)^2 - 1 = 2s + s^2
        for _ in 0..SQUARINGS {
            s = s.mul_f64(2.0) + s * s;
        }
        (s + Self::ONE).ldexp(k as i32)
    }

    /// Natural log of a positive value: one Newton step on `e^y = x`.
    pub fn ln(self) -> Self {
        let y = Self::from_f64(self.hi.ln());
        y + self * (-y).exp() - Self::ONE
    }

    /// Fractional part in `[0, 1)`, as an `f64`.
    pub fn frac(self) -> f64 {
        let fh = self.hi - self.hi.floor();
        let fl = self.lo - self.lo.floor();
        let s = fh + fl;
        let f = s - s.floor();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_ln_round_trip() {
        for &x in &[1.0, 2.0, 10.0, 12345.0, 1e6, 3.5e12] {
            let d = DoubleDouble::from_f64(x);
            let back = d.ln().exp();
            let err = (back - d).hi.abs() / x;
            assert!(err < 1e-30, "x = {x}: {err:e}");
        }
    }

    #[test]
    fn ln_two_matches_constant() {
        let l = DoubleDouble::from_f64(2.0).ln();
        assert!((l - LN2).hi.abs() < 1e-31);
    }

    #[test]
    fn exact_powers() {
        // 10^6^(3/2) = 10^9 exactly
        let v = (DoubleDouble::from_f64(1e6).ln().mul_f64(1.5)).exp();
        assert!((v - DoubleDouble::from_f64(1e9)).hi.abs() < 1e-20);
    }

    #[test]
    fn frac_uses_low_word() {
        let v = DoubleDouble { hi: 1e17, lo: 0.25 };
        assert_eq!(v.frac(), 0.25);
        let v = DoubleDouble { hi: -3.0, lo: -0.25 };
        assert_eq!(v.frac(), 0.75);
    }
}
