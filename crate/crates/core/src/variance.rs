//! Barban–Davenport–Halberstam variances.
//!
//! A [`WeightTable`] holds `w(n)` for `n` in `(mu X, X]`. For each modulus
//! `q` one pass over the table buckets the weights into residue classes;
//! the direct variance is then
//! `Σ_{(a,q)=1} |S(a) - M/φ(q)|²` and the character form is
//! `φ(q)^-1 Σ_χ |Ψ(χ) - δ(χ) M|²` with `Ψ(χ) = Σ_a χ(a) S(a)`.
//! The two agree for any weights; comparing them is the main cross-check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use num_complex::Complex64;
// unused when std float methods are linked in
#[allow(unused_imports)]
use num_traits::Float;

use crate::arith::{LambdaTable, PrimeTable};
use crate::characters::{psi_chi_from_residue_sums, GroupSource};
use crate::error::{param, Result};
use crate::oscillatory::{oscillatory_integral, reduced_phase, unit_exp_reduced, validate_exponent};
use crate::psprimes::{ps_indicator, PsConfig};
use crate::sum::{ComplexKahanSum, KahanSum};

/// How `w(n)` is formed from `Λ(n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `Λ(n) e(t n^c)`
    ClassicExp { c: f64, t: f64 },
    /// `Λ(n)` on Piatetski-Shapiro numbers
    PsPlain { ps: PsConfig },
    /// `Λ(n) n^(1-γ) e(t n^c)` on Piatetski-Shapiro numbers
    PsExp { ps: PsConfig, c: f64, t: f64 },
    /// `Λ(n)`
    RawLambda,
    /// `log p · e(t p^c)` on primes only
    LogpOnly { c: f64, t: f64 },
    /// caller-supplied values
    Custom,
}

impl WeightKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ClassicExp { .. } => "classic_exp",
            Self::PsPlain { .. } => "ps_plain",
            Self::PsExp { .. } => "ps_exp",
            Self::RawLambda => "raw_lambda",
            Self::LogpOnly { .. } => "logp_only",
            Self::Custom => "custom",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Self::PsPlain { ps } | Self::PsExp { ps, .. } => Some(ps.gamma()),
            _ => None,
        }
    }

    pub fn c(&self) -> Option<f64> {
        match *self {
            Self::ClassicExp { c, .. } | Self::PsExp { c, .. } | Self::LogpOnly { c, .. } => Some(c),
            _ => None,
        }
    }

    pub fn t(&self) -> Option<f64> {
        match *self {
            Self::ClassicExp { t, .. } | Self::PsExp { t, .. } | Self::LogpOnly { t, .. } => Some(t),
            _ => None,
        }
    }
}

/// `w(n)` for the integers `n` in `(mu X, X]`, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    x: f64,
    mu: f64,
    kind: WeightKind,
    first_n: u64,
    values: Vec<Complex64>,
}

fn check_range(x: f64, mu: f64) -> Result<(u64, u64)> {
    if !(x.is_finite() && x >= 2.0) {
        return param(format!("X = {x} must be finite and at least 2"));
    }
    if !(0.0..1.0).contains(&mu) {
        return param(format!("mu = {mu} must lie in [0, 1)"));
    }
    let last = x.floor() as u64;
    let first = (mu * x).floor() as u64 + 1;
    Ok((first, last))
}

fn exp_phase(t: f64, n: u64, c: f64) -> Result<Complex64> {
    Ok(unit_exp_reduced(reduced_phase(t, n, c)?))
}

impl WeightTable {
    /// Builds the table in one ascending pass over `(mu X, X]`.
    ///
    /// `lambda` must cover `X`; `primes` is only consulted for
    /// [`WeightKind::LogpOnly`].
    pub fn build(x: f64, mu: f64, kind: WeightKind, primes: &PrimeTable, lambda: &LambdaTable) -> Result<Self> {
        let (first, last) = check_range(x, mu)?;
        if lambda.limit() < last {
            return param(format!("Λ table covers n <= {} but X = {x}", lambda.limit()));
        }
        match &kind {
            WeightKind::ClassicExp { c, t } | WeightKind::PsExp { c, t, .. } | WeightKind::LogpOnly { c, t } => {
                validate_exponent(*c)?;
                if !t.is_finite() {
                    return param(format!("t = {t} must be finite"));
                }
            }
            WeightKind::Custom => return param("custom weights are supplied through WeightTable::custom"),
            _ => {}
        }
        if matches!(kind, WeightKind::LogpOnly { .. }) && primes.limit() < last {
            return param(format!("prime table covers n <= {} but X = {x}", primes.limit()));
        }
        let mut values = Vec::with_capacity((last + 1 - first.min(last + 1)) as usize);
        for n in first..=last {
            let lam = lambda.get(n);
            let w = if lam == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                match &kind {
                    WeightKind::ClassicExp { c, t } => exp_phase(*t, n, *c)? * lam,
                    WeightKind::PsPlain { ps } => Complex64::new(lam * f64::from(ps_indicator(n, ps)), 0.0),
                    WeightKind::PsExp { ps, c, t } => {
                        if ps_indicator(n, ps) == 0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            exp_phase(*t, n, *c)? * (lam * (n as f64).powf(1.0 - ps.gamma()))
                        }
                    }
                    WeightKind::RawLambda => Complex64::new(lam, 0.0),
                    WeightKind::LogpOnly { c, t } => {
                        if primes.is_prime(n) {
                            exp_phase(*t, n, *c)? * lam
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    }
                    WeightKind::Custom => unreachable!(),
                }
            };
            values.push(w);
        }
        Ok(Self { x, mu, kind, first_n: first, values })
    }

    /// Arbitrary weights; `values[i]` is `w(floor(mu X) + 1 + i)`.
    pub fn custom(x: f64, mu: f64, values: Vec<Complex64>) -> Result<Self> {
        let (first, last) = check_range(x, mu)?;
        let expected = (last + 1).saturating_sub(first) as usize;
        if values.len() != expected {
            return param(format!("custom table needs {expected} values for (mu X, X], got {}", values.len()));
        }
        if values.iter().any(|w| !(w.re.is_finite() && w.im.is_finite())) {
            return param("custom weights must be finite");
        }
        Ok(Self { x, mu, kind: WeightKind::Custom, first_n: first, values })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// Smallest `n` in the table.
    pub fn first_n(&self) -> u64 {
        self.first_n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `w(n)`, zero outside the range.
    pub fn get(&self, n: u64) -> Complex64 {
        n.checked_sub(self.first_n)
            .and_then(|i| self.values.get(i as usize))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn total(&self) -> Complex64 {
        self.values.iter().copied().collect::<ComplexKahanSum>().value()
    }
}

/// The expected total `M`; each reduced class expects `M / φ(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainTerm {
    pub value: Complex64,
    /// For Piatetski-Shapiro weights: the bare `X^γ`, next to the default
    /// `X^γ - (mu X)^γ` in `value`.
    pub alternative: Option<Complex64>,
}

impl MainTerm {
    pub fn new(value: Complex64) -> Self {
        Self { value, alternative: None }
    }

    /// Main term matched to the table's kind.
    ///
    /// `Custom` tables have no natural main term; use [`MainTerm::new`].
    pub fn for_table(w: &WeightTable) -> Result<Self> {
        let (x, lo) = (w.x, w.mu * w.x);
        match &w.kind {
            WeightKind::ClassicExp { c, t } | WeightKind::LogpOnly { c, t } => {
                Ok(Self::new(oscillatory_integral(*t, *c, lo, x)?))
            }
            WeightKind::PsPlain { ps } => {
                let g = ps.gamma();
                Ok(Self {
                    value: Complex64::new(x.powf(g) - lo.powf(g), 0.0),
                    alternative: Some(Complex64::new(x.powf(g), 0.0)),
                })
            }
            WeightKind::PsExp { ps, c, t } => Ok(Self::new(oscillatory_integral(*t, *c, lo, x)? * ps.gamma())),
            WeightKind::RawLambda => Ok(Self::new(Complex64::new(x - lo, 0.0))),
            WeightKind::Custom => param("custom weights need an explicit main term"),
        }
    }
}

/// `Σ w(n)` over `n ≡ a (mod q)` in the table's range.
pub fn progression_sum(w: &WeightTable, q: u64, a: i64) -> Result<Complex64> {
    if q == 0 {
        return param("modulus q must be positive");
    }
    let r = a.rem_euclid(q as i64) as u64;
    let offset = (r + q - w.first_n % q) % q;
    let mut acc = ComplexKahanSum::new();
    for v in w.values.iter().skip(offset as usize).step_by(q as usize) {
        acc.add(*v);
    }
    Ok(acc.value())
}

/// `sums[a] = Σ_{n ≡ a (mod q)} w(n)` for `0 <= a < q`, from one pass.
pub fn residue_sums(w: &WeightTable, q: u64) -> Vec<Complex64> {
    bucket(w.first_n, &w.values, q)
}

fn bucket(first_n: u64, values: &[Complex64], q: u64) -> Vec<Complex64> {
    assert!(q >= 1, "modulus q must be positive");
    let q = q as usize;
    let mut acc = vec![ComplexKahanSum::new(); q];
    let mut r = (first_n % q as u64) as usize;
    for v in values {
        acc[r].add(*v);
        r += 1;
        if r == q {
            r = 0;
        }
    }
    acc.into_iter().map(|s| s.value()).collect()
}

/// `Σ_{(a,q)=1} |sums[a] - M/φ(q)|²`; the reduced residues come from `group`.
pub fn per_modulus_direct(sums: &[Complex64], coprime: &[u32], main: Complex64) -> f64 {
    let expected = main / coprime.len() as f64;
    coprime.iter().map(|&a| (sums[a as usize] - expected).norm_sqr()).collect::<KahanSum>().value()
}

/// `φ(q)^-1 Σ_χ |Ψ(χ) - δ(χ) M|²` for the group of `q`.
pub fn per_modulus_characters(sums: &[Complex64], group: &crate::characters::CharacterGroup, main: Complex64) -> f64 {
    let mut acc = KahanSum::new();
    for chi in group.characters() {
        let mut psi = psi_chi_from_residue_sums(sums, chi, group);
        if chi.is_principal {
            psi -= main;
        }
        acc.add(psi.norm_sqr());
    }
    acc.value() / group.order() as f64
}

/// Total over `q <= Q` together with each modulus's share.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTerms {
    pub total: f64,
    /// `per_q[i]` belongs to `q = i + 1`.
    pub per_q: Vec<f64>,
}

impl VarianceTerms {
    /// Sums already-computed per-modulus terms in ascending `q`.
    pub fn from_per_q(per_q: Vec<f64>) -> Self {
        let total = per_q.iter().copied().collect::<KahanSum>().value();
        Self { total, per_q }
    }
}

/// Reduced residues mod `q` without building a character group.
pub fn coprime_residues(q: u64) -> Vec<u32> {
    (0..q).filter(|&a| num_integer::gcd(a, q) == 1).map(|a| a as u32).collect()
}

/// Direct variance for one modulus.
pub fn direct_term(w: &WeightTable, q: u64, main: &MainTerm) -> f64 {
    per_modulus_direct(&residue_sums(w, q), &coprime_residues(q), main.value)
}

/// Character-form variance for one modulus.
pub fn character_term(w: &WeightTable, q: u64, main: &MainTerm, groups: &impl GroupSource) -> Result<f64> {
    let group = groups.group(q)?;
    Ok(per_modulus_characters(&residue_sums(w, q), &group, main.value))
}

/// `Σ_{q<=Q} Σ_{(a,q)=1} |S(q, a) - M/φ(q)|²`, sequentially in `q`.
pub fn bdh_variance_direct(w: &WeightTable, q_max: u64, main: &MainTerm) -> Result<VarianceTerms> {
    if q_max == 0 {
        return param("Q must be at least 1");
    }
    Ok(VarianceTerms::from_per_q((1..=q_max).map(|q| direct_term(w, q, main)).collect()))
}

/// `Σ_{q<=Q} φ(q)^-1 Σ_χ |Ψ(χ) - δ(χ) M|²`, sequentially in `q`.
pub fn bdh_variance_characters(
    w: &WeightTable,
    q_max: u64,
    main: &MainTerm,
    groups: &impl GroupSource,
) -> Result<VarianceTerms> {
    if q_max == 0 {
        return param("Q must be at least 1");
    }
    let per_q = (1..=q_max).map(|q| character_term(w, q, main, groups)).collect::<Result<_>>()?;
    Ok(VarianceTerms::from_per_q(per_q))
}

/// `|a - b| / max(a, 1)`.
pub fn relative_gap(direct: f64, character: f64) -> f64 {
    (direct - character).abs() / direct.max(1.0)
}

/// One variance measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub x: f64,
    pub q_max: u64,
    pub mu: f64,
    pub kind: WeightKind,
    pub main: MainTerm,
    pub direct_variance: f64,
    pub character_variance: f64,
    pub normalized_ratio: f64,
    /// Ratio of the direct variance recomputed with `main.alternative`.
    pub normalized_ratio_alt: Option<f64>,
    /// `(q, direct, character)`
    pub per_q_breakdown: Option<Vec<(u64, f64, f64)>>,
    pub seed: u64,
    pub wall_time: Duration,
}

/// Expected order of the variance: `X Q log X`,
/// `X^γ Q log X` for plain and `X^(2-γ) Q log X` for weighted
/// Piatetski-Shapiro sums.
pub fn normalizer(kind: &WeightKind, x: f64, q_max: u64) -> f64 {
    let scale = match kind {
        WeightKind::PsPlain { ps } => x.powf(ps.gamma()),
        WeightKind::PsExp { ps, .. } => x.powf(2.0 - ps.gamma()),
        _ => x,
    };
    scale * q_max as f64 * x.ln()
}

/// Direct variance over the kind-matched normalizer.
pub fn normalized_ratio(report: &VarianceReport) -> f64 {
    if report.direct_variance == 0.0 {
        return 0.0;
    }
    report.direct_variance / normalizer(&report.kind, report.x, report.q_max)
}

/// `Σ_{q<=Q} (q/φ(q)) Σ*_χ |Σ_{M<n<=M+N} a_n χ(n)|²` over
/// `(N + Q²) Σ |a_n|²`; at most 1 by the sharp large sieve.
pub fn large_sieve_check(m: i64, n: u64, q_max: u64, coeffs: &[Complex64], groups: &impl GroupSource) -> Result<f64> {
    if n == 0 || q_max == 0 {
        return param("large sieve needs N >= 1 and Q >= 1");
    }
    if coeffs.len() as u64 != n {
        return param(format!("expected {n} coefficients, got {}", coeffs.len()));
    }
    if coeffs.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return param("coefficients must be finite");
    }
    let energy = coeffs.iter().map(|a| a.norm_sqr()).collect::<KahanSum>().value();
    if energy == 0.0 {
        return Ok(0.0);
    }
    let mut lhs = KahanSum::new();
    for q in 1..=q_max {
        let group = groups.group(q)?;
        let first = (m + 1).rem_euclid(q as i64) as u64;
        let sums = bucket(first, coeffs, q);
        let mut inner = KahanSum::new();
        for chi in group.primitive_characters() {
            inner.add(psi_chi_from_residue_sums(&sums, chi, &group).norm_sqr());
        }
        lhs.add(q as f64 / group.order() as f64 * inner.value());
    }
    let q2 = (q_max as f64).powi(2);
    Ok(lhs.value() / ((n as f64 + q2) * energy))
}
