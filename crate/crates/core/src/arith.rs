//! Sieving and elementary multiplicative functions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_integer::Roots;
// unused when std float methods are linked in
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{param, resource, Result};

/// Largest sieve limit accepted by [`build_prime_table`].
pub const DEFAULT_LIMIT_CAP: u64 = 1_000_000_000;

/// Number of integers sieved per segment.
pub const SEGMENT_LEN: usize = 1 << 20;

/// All primes up to `limit`, with an O(1) membership bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    bits: Vec<u64>,
    primes: Vec<u32>,
}

/// Sieve the primes up to `limit` with the default cap.
pub fn build_prime_table(limit: u64) -> Result<PrimeTable> {
    PrimeTable::with_cap(limit, DEFAULT_LIMIT_CAP)
}

impl PrimeTable {
    /// Segmented sieve of Eratosthenes over `[0, limit]`.
    pub fn with_cap(limit: u64, cap: u64) -> Result<Self> {
        if limit < 2 {
            return param(format!("prime table limit must be at least 2, got {limit}"));
        }
        if limit > cap || limit > u64::from(u32::MAX) {
            return param(format!("prime table limit {limit} exceeds the cap {cap}"));
        }

        let root = limit.sqrt();
        let base = small_sieve(root as usize);
        let mut bits = vec![0u64; (limit as usize >> 6) + 1];
        let mut primes: Vec<u32> = Vec::new();
        let mut segment = vec![true; SEGMENT_LEN];

        let mut lo = 0u64;
        while lo <= limit {
            let hi = (lo + SEGMENT_LEN as u64 - 1).min(limit);
            let len = (hi - lo + 1) as usize;
            segment[..len].fill(true);
            for n in lo..lo.saturating_add(2).min(hi + 1) {
                if n < 2 {
                    segment[(n - lo) as usize] = false;
                }
            }
            for &p in &base {
                let p = p as u64;
                if p * p > hi {
                    break;
                }
                let first = (p * p).max(lo.div_ceil(p) * p);
                let mut m = first;
                while m <= hi {
                    segment[(m - lo) as usize] = false;
                    m += p;
                }
            }
            for (i, &flag) in segment[..len].iter().enumerate() {
                if flag {
                    let n = lo + i as u64;
                    bits[(n >> 6) as usize] |= 1 << (n & 63);
                    primes.push(n as u32);
                }
            }
            lo = hi + 1;
        }

        Ok(Self { limit, bits, primes })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Primes in the half-open interval `(lo, hi]`.
    pub fn primes_in(&self, lo: u64, hi: u64) -> &[u32] {
        let start = self.primes.partition_point(|&p| u64::from(p) <= lo);
        let end = self.primes.partition_point(|&p| u64::from(p) <= hi);
        &self.primes[start..end.max(start)]
    }

    /// Membership test; panics if `n` is above the limit.
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n <= self.limit, "{n} is beyond the prime table limit {}", self.limit);
        self.bits[(n >> 6) as usize] >> (n & 63) & 1 == 1
    }

    /// Trial division by the sieved primes up to `sqrt(n)`.
    ///
    /// Needs `limit >= sqrt(n)`.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        if n == 0 {
            return param("cannot factorize 0");
        }
        if n.sqrt() > self.limit {
            return param(format!("prime table up to {} cannot factor {n}", self.limit));
        }
        let mut rest = n;
        let mut out = Vec::new();
        for &p in &self.primes {
            let p = u64::from(p);
            if p * p > rest {
                break;
            }
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
        }
        if rest > 1 {
            out.push((rest, 1));
        }
        Ok(out)
    }
}

fn small_sieve(limit: usize) -> Vec<u32> {
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for n in 2..=limit {
        if !composite[n] {
            primes.push(n as u32);
            let mut m = n * n;
            while m <= limit {
                composite[m] = true;
                m += n;
            }
        }
    }
    primes
}

/// `values[n] = Λ(n)` for `0 <= n <= limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    limit: u64,
    values: Vec<f64>,
}

impl LambdaTable {
    /// `log p` is evaluated once per prime and copied to every power of it,
    /// so all powers of `p` carry bit-identical weights.
    pub fn from_primes(primes: &PrimeTable) -> Self {
        let limit = primes.limit();
        let mut values = vec![0.0; limit as usize + 1];
        for &p in primes.primes() {
            let p = u64::from(p);
            let log_p = (p as f64).ln();
            let mut pk = p;
            loop {
                values[pk as usize] = log_p;
                match pk.checked_mul(p) {
                    Some(next) if next <= limit => pk = next,
                    _ => break,
                }
            }
        }
        Self { limit, values }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        self.values[n as usize]
    }
}

/// Λ(n): `log p` when `n = p^k`, otherwise 0.
///
/// `n` may exceed the table limit as long as its smallest prime factor is
/// in the table or `n <= limit²`.
pub fn von_mangoldt(n: u64, table: &PrimeTable) -> Result<f64> {
    if n == 0 {
        return param("von Mangoldt function is undefined at 0");
    }
    if n == 1 {
        return Ok(0.0);
    }
    if n <= table.limit() && table.is_prime(n) {
        return Ok((n as f64).ln());
    }
    for &p in table.primes() {
        let p = u64::from(p);
        if p * p > n {
            break;
        }
        if n.is_multiple_of(p) {
            let mut rest = n;
            while rest.is_multiple_of(p) {
                rest /= p;
            }
            return Ok(if rest == 1 { (p as f64).ln() } else { 0.0 });
        }
    }
    // No factor up to min(limit, sqrt n): prime if the sieve reached sqrt n.
    if n.sqrt() <= table.limit() {
        Ok((n as f64).ln())
    } else {
        param(format!("prime table up to {} cannot resolve Λ({n})", table.limit()))
    }
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>> {
    if n == 0 {
        return param("cannot factorize 0");
    }
    let mut rest = n;
    let mut out = Vec::new();
    for p in [2u64, 3] {
        let mut e = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    // 6k ± 1 wheel
    let mut d = 5u64;
    while d.saturating_mul(d) <= rest {
        for p in [d, d + 2] {
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
        }
        d += 6;
    }
    if rest > 1 {
        out.push((rest, 1));
    }
    Ok(out)
}

/// φ(n) from the factorization of `n`.
pub fn euler_phi(n: u64) -> Result<u64> {
    Ok(phi_from_factors(&factorize(n)?))
}

pub(crate) fn phi_from_factors(factors: &[(u64, u32)]) -> u64 {
    factors.iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product()
}

/// Ceiling of a resource check used by modules that allocate O(n) tables.
pub(crate) fn check_table_size(n: u64, cap: u64, what: &str) -> Result<()> {
    if n > cap {
        return resource(format!("{what} of size {n} exceeds the cap {cap}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use proptest::prelude::*;

    fn trial_division_is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn first_primes() {
        assert_eq!(build_prime_table(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(build_prime_table(2).unwrap().primes(), &[2]);
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(matches!(build_prime_table(1), Err(crate::Error::Parameter(_))));
        assert!(matches!(build_prime_table(0), Err(crate::Error::Parameter(_))));
        assert!(PrimeTable::with_cap(1001, 1000).is_err());
    }

    #[test]
    fn agrees_with_trial_division_up_to_1e5() {
        let table = build_prime_table(100_000).unwrap();
        let oracle: Vec<u32> = (0..=100_000u64).filter(|&n| trial_division_is_prime(n)).map(|n| n as u32).collect();
        assert_eq!(table.primes(), oracle.as_slice());
        for n in 0..=100_000u64 {
            assert_eq!(table.is_prime(n), trial_division_is_prime(n), "n = {n}");
        }
    }

    #[test]
    fn segment_boundaries_are_seamless() {
        // Crosses several segments.
        let limit = 3 * SEGMENT_LEN as u64 + 17;
        let table = build_prime_table(limit).unwrap();
        let plain = small_sieve(limit as usize);
        assert_eq!(table.primes(), plain.as_slice());
    }

    #[test]
    fn count_up_to_one_million() {
        // Independent plain sieve as the oracle.
        let oracle = small_sieve(1_000_000).len();
        assert_eq!(oracle, 78_498);
        assert_eq!(build_prime_table(1_000_000).unwrap().primes().len(), oracle);
    }

    #[test]
    fn primes_in_half_open_range() {
        let table = build_prime_table(100).unwrap();
        assert_eq!(table.primes_in(7, 13), &[11, 13]);
        assert_eq!(table.primes_in(90, 100), &[97]);
        assert!(table.primes_in(24, 28).is_empty());
    }

    #[test]
    fn von_mangoldt_examples() {
        let table = build_prime_table(100).unwrap();
        assert!((von_mangoldt(8, &table).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(von_mangoldt(12, &table).unwrap(), 0.0);
        assert_eq!(von_mangoldt(97, &table).unwrap(), 97f64.ln());
        assert_eq!(von_mangoldt(1, &table).unwrap(), 0.0);
        assert!(von_mangoldt(0, &table).is_err());
        // beyond the table, resolved by trial division
        assert_eq!(von_mangoldt(9973, &table).unwrap(), 9973f64.ln());
        assert_eq!(von_mangoldt(3u64.pow(8), &table).unwrap(), 3f64.ln());
        assert_eq!(von_mangoldt(89 * 97, &table).unwrap(), 0.0);
        // 10007 * 10009 is beyond limit² and has no small factor
        assert!(von_mangoldt(10_007 * 10_009, &table).is_err());
    }

    #[test]
    fn lambda_table_matches_pointwise() {
        let primes = build_prime_table(5000).unwrap();
        let lambda = LambdaTable::from_primes(&primes);
        for n in 1..=5000 {
            assert_eq!(lambda.get(n), von_mangoldt(n, &primes).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn divisor_sum_of_lambda_is_log() {
        let primes = build_prime_table(10_000).unwrap();
        let lambda = LambdaTable::from_primes(&primes);
        for n in 1..=10_000u64 {
            let s: f64 = (1..=n).filter(|d| n % d == 0).map(|d| lambda.get(d)).sum();
            assert!((s - (n as f64).ln()).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn chebyshev_psi_near_x() {
        let primes = build_prime_table(1_000_000).unwrap();
        let lambda = LambdaTable::from_primes(&primes);
        let psi = crate::sum::kahan_sum(lambda.values());
        // Oracle: Λ summed from an independent plain sieve.
        let mut oracle = crate::sum::KahanSum::new();
        for p in small_sieve(1_000_000) {
            let p = u64::from(p);
            let mut pk = p;
            while pk <= 1_000_000 {
                oracle.add((p as f64).ln());
                pk *= p;
            }
        }
        assert!((psi - oracle.value()).abs() < 1e-6);
        assert!((psi / 1e6 - 1.0).abs() < 0.005, "psi(1e6) = {psi}");
    }

    #[test]
    fn totient_examples() {
        assert_eq!(euler_phi(1).unwrap(), 1);
        assert_eq!(euler_phi(12).unwrap(), 4);
        assert_eq!(euler_phi(97).unwrap(), 96);
        assert!(euler_phi(0).is_err());
        for n in 1..300u64 {
            let count = (1..=n).filter(|&a| a.gcd(&n) == 1).count() as u64;
            assert_eq!(euler_phi(n).unwrap(), count);
        }
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).unwrap().is_empty());
        assert_eq!(factorize(360).unwrap(), [(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factorize(2_147_483_647).unwrap(), [(2_147_483_647, 1)]);
        assert!(trial_division_is_prime(2_147_483_647));
        assert!(factorize(0).is_err());
        let table = build_prime_table(50_000).unwrap();
        assert_eq!(table.factorize(2_147_483_647).unwrap(), [(2_147_483_647, 1)]);
        assert_eq!(table.factorize(360).unwrap(), factorize(360).unwrap());
    }

    proptest! {
        #[test]
        fn factorization_multiplies_back(n in 1u64..10_000_000_000) {
            let f = factorize(n).unwrap();
            prop_assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), n);
            prop_assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(f.iter().all(|&(p, _)| trial_division_is_prime(p)));
        }

        #[test]
        fn totient_is_multiplicative(m in 1u64..100_000, n in 1u64..100_000) {
            prop_assume!(m.gcd(&n) == 1);
            prop_assert_eq!(euler_phi(m * n).unwrap(), euler_phi(m).unwrap() * euler_phi(n).unwrap());
        }
    }
}
