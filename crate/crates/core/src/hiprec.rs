//! Arbitrary-precision fixed-point reals on top of `BigInt`, used to settle
//! `floor(x^g)` when `g` has no exact rational form and the `f64` value lands
//! too close to an integer.

use core::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `mantissa * 2^-bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Fixed {
    mantissa: BigInt,
    bits: u32,
}

/// Working precision in bits for `digits` decimal digits, plus guard bits.
pub(crate) fn bits_for_digits(digits: u32) -> u32 {
    (f64::from(digits) * core::f64::consts::LOG2_10) as u32 + 64
}

impl Fixed {
    #[cfg(test)]
    pub fn from_u64(x: u64, bits: u32) -> Self {
        Self { mantissa: BigInt::from(x) << bits, bits }
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64, bits: u32) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self { mantissa: BigInt::zero(), bits };
        }
        let raw = x.to_bits();
        let sign = if raw >> 63 == 1 { Sign::Minus } else { Sign::Plus };
        let exp = ((raw >> 52) & 0x7ff) as i64;
        let frac = raw & ((1 << 52) - 1);
        let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | 1 << 52, exp - 1075) };
        let mut mantissa = BigInt::from_biguint(sign, m.into());
        let shift = e + i64::from(bits);
        if shift >= 0 {
            mantissa <<= shift as usize;
        } else {
            mantissa >>= (-shift) as usize;
        }
        Self { mantissa, bits }
    }

    fn with(&self, mantissa: BigInt) -> Self {
        Self { mantissa, bits: self.bits }
    }

    fn one(bits: u32) -> Self {
        Self { mantissa: BigInt::one() << bits, bits }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.with(&self.mantissa + &other.mantissa)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.with(&self.mantissa - &other.mantissa)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.with((&self.mantissa * &other.mantissa) >> self.bits)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.with((&self.mantissa << self.bits) / &other.mantissa)
    }

    fn div_small(&self, d: u64) -> Self {
        self.with(&self.mantissa / BigInt::from(d))
    }

    fn shr(&self, k: u32) -> Self {
        self.with(&self.mantissa >> k)
    }

    pub fn is_negligible(&self) -> bool {
        self.mantissa.abs() <= BigInt::one()
    }

    pub fn floor(&self) -> BigInt {
        self.mantissa.div_floor(&(BigInt::one() << self.bits))
    }

    /// Nearest integer, ties upward.
    pub fn round(&self) -> BigInt {
        let half = BigInt::one() << (self.bits - 1);
        (&self.mantissa + half).div_floor(&(BigInt::one() << self.bits))
    }

    /// Distance to the nearest integer, as an `f64`.
    pub fn distance_to_integer(&self) -> f64 {
        let unit = BigInt::one() << self.bits;
        let r = self.mantissa.mod_floor(&unit);
        let r = core::cmp::min(r.clone(), &unit - r);
        // scale into f64 without overflow
        let excess = self.bits.saturating_sub(60);
        let r = (r >> excess).to_f64().unwrap_or(f64::MAX);
        libm::ldexp(r, -((self.bits - excess) as i32))
    }

    /// `2 atanh(z) = ln((1 + z) / (1 - z))` for small `|z|`.
    fn two_atanh(z: &Self) -> Self {
        let z2 = z.mul(z);
        let mut power = z.clone();
        let mut acc = z.clone();
        let mut k = 1u64;
        loop {
            power = power.mul(&z2);
            let term = power.div_small(2 * k + 1);
            if term.is_negligible() {
                break;
            }
            acc = acc.add(&term);
            k += 1;
        }
        acc.add(&acc)
    }

    fn ln2(bits: u32) -> Self {
        let third = Self::one(bits).div_small(3);
        Self::two_atanh(&third)
    }

    /// Natural log of a positive integer.
    pub fn ln_u64(x: u64, bits: u32) -> Self {
        assert!(x > 0);
        let s = 63 - x.leading_zeros();
        // y = x / 2^s in [1, 2)
        let y = Self { mantissa: BigInt::from(x) << (bits - s), bits };
        let one = Self::one(bits);
        let z = y.sub(&one).div(&y.add(&one));
        let ln2 = Self::ln2(bits);
        Self::two_atanh(&z).add(&ln2.with(&ln2.mantissa * BigInt::from(s)))
    }

    pub fn exp(&self) -> Self {
        const HALVINGS: u32 = 24;
        let bits = self.bits;
        let ln2 = Self::ln2(bits);
        let k = self.mantissa.div_floor(&ln2.mantissa);
        let r = self.sub(&ln2.with(&ln2.mantissa * &k));
        let r = r.shr(HALVINGS);
        // e^r - 1
        let mut term = r.clone();
        let mut s = r.clone();
        let mut n = 2u64;
        loop {
            term = term.mul(&r).div_small(n);
            if term.is_negligible() {
                break;
            }
            s = s.add(&term);
            n += 1;
        }
        for _ in 0..HALVINGS {
            s = s.add(&s).add(&s.mul(&s));
        }
        let v = s.add(&Self::one(bits));
        let k = k.to_i64().expect("exponent fits");
        match k.cmp(&0) {
            Ordering::Less => v.shr((-k) as u32),
            _ => v.with(v.mantissa.clone() << k as usize),
        }
    }
}

/// `x^e` for an integer `x >= 1` and real `e`, at `digits` decimal digits.
pub(crate) fn pow_u64(x: u64, e: f64, digits: u32) -> Fixed {
    let bits = bits_for_digits(digits);
    Fixed::ln_u64(x, bits).mul(&Fixed::from_f64(e, bits)).exp()
}

/// `x^(1/g)` for an integer `x >= 1`, at `digits` decimal digits.
pub(crate) fn root_pow_u64(x: u64, g: f64, digits: u32) -> Fixed {
    let bits = bits_for_digits(digits);
    Fixed::ln_u64(x, bits).div(&Fixed::from_f64(g, bits)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_and_exp_match_f64() {
        for x in [1u64, 2, 3, 10, 97, 1_000_000, 123_456_789] {
            let l = Fixed::ln_u64(x, 200);
            assert!(((l.mantissa.to_f64().unwrap() / 2f64.powi(200)) - (x as f64).ln()).abs() < 1e-15);
        }
        let e = Fixed::from_u64(1, 200).exp();
        let expected = core::f64::consts::E;
        assert!((e.mantissa.to_f64().unwrap() / 2f64.powi(200) - expected).abs() < 1e-15);
    }

    #[test]
    fn perfect_powers_are_integral_to_high_precision() {
        // 2^10, 1024^(1/2), 16^(1/0.5)
        let v = pow_u64(2, 10.0, 50);
        assert!(v.distance_to_integer() < 1e-45);
        let v = pow_u64(1024, 0.5, 50);
        assert!(v.distance_to_integer() < 1e-45);
        let v = root_pow_u64(16, 0.5, 50);
        assert!(v.distance_to_integer() < 1e-45);
    }

    #[test]
    fn f64_conversion_is_exact() {
        let x = 0.9f64;
        let f = Fixed::from_f64(x, 80);
        assert_eq!(f.mantissa.to_f64().unwrap() / 2f64.powi(80), x);
        let f = Fixed::from_f64(-2.5, 10);
        assert_eq!(f.floor(), BigInt::from(-3));
    }
}
