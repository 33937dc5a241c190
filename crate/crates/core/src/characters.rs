//! The Dirichlet character group modulo q.
//!
//! `(Z/qZ)^*` is split by the Chinese remainder theorem into cyclic factors:
//! one per odd prime power (generated by a primitive root), `<-1>` for `4`,
//! and `<-1> x <5>` for `2^k` with `k >= 3`. A character is the exponent
//! vector `(e_1, ..., e_r)` with `chi(g_j) = e(e_j / d_j)`; its value at `n`
//! is `e(sum_j e_j x_j / d_j)` where `x_j` are the discrete logs of `n`.
//!
//! Every phase is an exact fraction `m / L` with `L` the group exponent, so
//! values come from a cached table of `L`-th roots of unity.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_integer::Integer;

use crate::arith::{check_table_size, factorize};
use crate::error::{param, Result};
use crate::oscillatory::unit_exp_of_fraction;
use crate::sum::ComplexKahanSum;
use crate::variance::WeightTable;

/// Largest modulus for which a group (and its dense discrete-log table) is built.
pub const MODULUS_CAP: u64 = 1_000_000;

const NOT_COPRIME: u32 = u32::MAX;

/// One cyclic factor of `(Z/qZ)^*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicFactor {
    /// Generator as a residue mod q (1 modulo the other prime-power parts).
    pub generator: u64,
    pub order: u64,
    /// The prime power of q this factor lives in.
    pub prime: u64,
    pub prime_exponent: u32,
    role: FactorRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FactorRole {
    OddPrimePower,
    TwoMinusOne,
    TwoFive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletCharacter {
    pub modulus: u64,
    pub component_exponents: Vec<u32>,
    pub conductor: u64,
    pub is_principal: bool,
}

impl DirichletCharacter {
    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus
    }
}

#[derive(Debug, Clone)]
pub struct CharacterGroup {
    modulus: u64,
    factors: Vec<CyclicFactor>,
    exponent: u64,
    /// `dlog[a * r + j]` is the discrete log of `a` in factor `j`.
    dlog: Vec<u32>,
    roots: Vec<Complex64>,
    coprime: Vec<u32>,
    characters: Vec<DirichletCharacter>,
}

/// Build the character group mod `q`.
pub fn character_group(q: u64) -> Result<CharacterGroup> {
    CharacterGroup::new(q)
}

struct LocalPart {
    prime: u64,
    exponent: u32,
    modulus: u64,
    // (generator mod p^k, order) per cyclic factor
    gens: Vec<(u64, u64, FactorRole)>,
    // dlogs[a * gens.len() + j] for a in 0..p^k
    dlogs: Vec<u32>,
}

impl CharacterGroup {
    pub fn new(q: u64) -> Result<Self> {
        if q == 0 {
            return param("character modulus must be positive");
        }
        check_table_size(q, MODULUS_CAP, "character modulus")?;

        let parts: Vec<LocalPart> = factorize(q)?.into_iter().map(|(p, k)| local_part(p, k)).collect();

        let mut factors = Vec::new();
        for part in &parts {
            let cofactor = q / part.modulus;
            for &(g, order, role) in &part.gens {
                factors.push(CyclicFactor {
                    generator: crt_lift(g, part.modulus, cofactor),
                    order,
                    prime: part.prime,
                    prime_exponent: part.exponent,
                    role,
                });
            }
        }
        let rank = factors.len();
        let exponent = factors.iter().fold(1u64, |l, f| l.lcm(&f.order));

        let mut dlog = vec![NOT_COPRIME; q as usize * rank.max(1)];
        let mut coprime = Vec::new();
        for a in 0..q {
            if a.gcd(&q) != 1 {
                continue;
            }
            coprime.push(a as u32);
            let mut j = 0;
            for part in &parts {
                let local = (a % part.modulus) as usize;
                let width = part.gens.len();
                for i in 0..width {
                    dlog[a as usize * rank + j] = part.dlogs[local * width + i];
                    j += 1;
                }
            }
        }

        let roots = (0..exponent).map(|m| unit_exp_of_fraction(m, exponent)).collect();

        let mut group = Self { modulus: q, factors, exponent, dlog, roots, coprime, characters: Vec::new() };
        group.characters = group.enumerate();
        Ok(group)
    }

    // Lexicographic in the exponent vector, last component fastest.
    fn enumerate(&self) -> Vec<DirichletCharacter> {
        let orders: Vec<u64> = self.factors.iter().map(|f| f.order).collect();
        let total: u64 = orders.iter().product();
        let mut out = Vec::with_capacity(total as usize);
        let mut exps = vec![0u32; orders.len()];
        for _ in 0..total {
            let conductor = self.conductor_of(&exps);
            out.push(DirichletCharacter {
                modulus: self.modulus,
                component_exponents: exps.clone(),
                conductor,
                is_principal: exps.iter().all(|&e| e == 0),
            });
            for j in (0..exps.len()).rev() {
                exps[j] += 1;
                if u64::from(exps[j]) < orders[j] {
                    break;
                }
                exps[j] = 0;
            }
        }
        out
    }

    fn conductor_of(&self, exps: &[u32]) -> u64 {
        let mut conductor = 1u64;
        let mut j = 0;
        while j < self.factors.len() {
            let f = &self.factors[j];
            match f.role {
                FactorRole::OddPrimePower => {
                    let e = u64::from(exps[j]);
                    let ord = f.order / e.gcd(&f.order);
                    if ord > 1 {
                        // Trivial on 1 + p^s Z iff ord | phi(p^s).
                        let mut s = 1;
                        let mut phi = f.prime - 1;
                        while !phi.is_multiple_of(ord) {
                            s += 1;
                            phi *= f.prime;
                        }
                        conductor *= f.prime.pow(s);
                    }
                    j += 1;
                }
                FactorRole::TwoMinusOne => {
                    let sign = exps[j];
                    let five = match self.factors.get(j + 1) {
                        Some(next) if next.role == FactorRole::TwoFive => {
                            let e = u64::from(exps[j + 1]);
                            Some(next.order / e.gcd(&next.order))
                        }
                        _ => None,
                    };
                    match five {
                        Some(ord) if ord > 1 => {
                            conductor *= 4 * ord;
                        }
                        _ if sign != 0 => conductor *= 4,
                        _ => {}
                    }
                    j += if five.is_some() { 2 } else { 1 };
                }
                FactorRole::TwoFive => unreachable!("<5> always follows <-1>"),
            }
        }
        conductor
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn factors(&self) -> &[CyclicFactor] {
        &self.factors
    }

    /// Exponent of the group: every phase has this denominator.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// φ(q), the number of characters.
    pub fn order(&self) -> usize {
        self.coprime.len()
    }

    /// Residues in `[0, q)` coprime to q, ascending.
    pub fn coprime_residues(&self) -> &[u32] {
        &self.coprime
    }

    pub fn characters(&self) -> &[DirichletCharacter] {
        &self.characters
    }

    pub fn primitive_characters(&self) -> impl Iterator<Item = &DirichletCharacter> {
        self.characters.iter().filter(|c| c.is_primitive())
    }

    pub fn principal(&self) -> &DirichletCharacter {
        &self.characters[0]
    }

    /// Discrete logs of `n` (one per cyclic factor), or `None` when
    /// `gcd(n, q) > 1`.
    pub fn discrete_log(&self, n: i64) -> Option<&[u32]> {
        let a = n.rem_euclid(self.modulus as i64) as usize;
        let rank = self.factors.len();
        if rank == 0 {
            // q is 1 or 2
            return ((a as u64).gcd(&self.modulus) == 1).then_some(&[]);
        }
        let row = &self.dlog[a * rank..(a + 1) * rank];
        (row[0] != NOT_COPRIME).then_some(row)
    }

    /// `chi(n) = e(m / L)`; returns `m`, or `None` when `gcd(n, q) > 1`.
    pub fn phase_numerator(&self, chi: &DirichletCharacter, n: i64) -> Option<u64> {
        let logs = self.discrete_log(n)?;
        Some(self.phase_from_logs(&chi.component_exponents, logs))
    }

    #[inline]
    fn phase_from_logs(&self, exps: &[u32], logs: &[u32]) -> u64 {
        let l = self.exponent;
        self.factors.iter().zip(exps.iter().zip(logs)).fold(0u64, |acc, (f, (&e, &x))| {
            let step = (u64::from(e) * u64::from(x)) % f.order * (l / f.order);
            (acc + step) % l
        })
    }

    /// Values of `chi` at `0, 1, ..., q-1`.
    pub fn value_table(&self, chi: &DirichletCharacter) -> Vec<Complex64> {
        (0..self.modulus as i64).map(|n| char_eval(chi, self, n)).collect()
    }

    /// The primitive character inducing `chi`, together with its group.
    pub fn primitive_inducing(&self, chi: &DirichletCharacter) -> Result<(CharacterGroup, DirichletCharacter)> {
        self.check(chi)?;
        let f = chi.conductor;
        let small = CharacterGroup::new(f)?;
        let mut exps = Vec::with_capacity(small.factors.len());
        for factor in &small.factors {
            // Lift the generator to a residue coprime to q.
            let mut n = factor.generator;
            while n.gcd(&self.modulus) != 1 {
                n += f;
            }
            let m = self.phase_numerator(chi, n as i64).expect("lifted generator is coprime to q");
            // chi(n) = e(m / L) must equal e(e_j / d_j)
            let num = m * factor.order;
            debug_assert_eq!(num % self.exponent, 0);
            exps.push((num / self.exponent % factor.order) as u32);
        }
        let induced = small
            .characters
            .iter()
            .find(|c| c.component_exponents == exps)
            .cloned()
            .expect("every exponent vector is a character");
        Ok((small, induced))
    }

    fn check(&self, chi: &DirichletCharacter) -> Result<()> {
        if chi.modulus != self.modulus || chi.component_exponents.len() != self.factors.len() {
            return param(format!("character mod {} does not belong to the group mod {}", chi.modulus, self.modulus));
        }
        Ok(())
    }
}

/// `chi(n)`: 0 when `gcd(n, q) > 1`, otherwise a root of unity.
pub fn char_eval(chi: &DirichletCharacter, group: &CharacterGroup, n: i64) -> Complex64 {
    debug_assert_eq!(chi.modulus, group.modulus);
    match group.phase_numerator(chi, n) {
        Some(m) => group.roots[m as usize],
        None => Complex64::new(0.0, 0.0),
    }
}

/// Conductor of `chi`; `chi` is primitive when this equals the modulus.
pub fn conductor(chi: &DirichletCharacter, group: &CharacterGroup) -> u64 {
    debug_assert_eq!(chi.modulus, group.modulus);
    chi.conductor
}

/// `Ψ(chi) = Σ_{μX < n <= X} w(n) chi(n)`, ascending in `n`.
pub fn psi_chi(weights: &WeightTable, chi: &DirichletCharacter, group: &CharacterGroup) -> Complex64 {
    let start = weights.first_n() as i64;
    let mut acc = ComplexKahanSum::new();
    for (i, &w) in weights.values().iter().enumerate() {
        acc.add(w * char_eval(chi, group, start + i as i64));
    }
    acc.value()
}

/// Same sum as [`psi_chi`], from residue-class sums `sums[a] = Σ_{n ≡ a} w(n)`.
pub fn psi_chi_from_residue_sums(sums: &[Complex64], chi: &DirichletCharacter, group: &CharacterGroup) -> Complex64 {
    debug_assert_eq!(sums.len() as u64, group.modulus);
    let rank = group.factors.len();
    let mut acc = ComplexKahanSum::new();
    for &a in &group.coprime {
        let logs = if rank == 0 { &[][..] } else { &group.dlog[a as usize * rank..(a as usize + 1) * rank] };
        let m = group.phase_from_logs(&chi.component_exponents, logs);
        acc.add(group.roots[m as usize] * sums[a as usize]);
    }
    acc.value()
}

/// Source of character groups for every modulus a computation visits.
pub trait GroupSource {
    fn group(&self, q: u64) -> Result<Cow<'_, CharacterGroup>>;
}

/// Builds each group when asked.
#[derive(Debug, Clone, Copy, Default)]
pub struct OnDemandGroups;

impl GroupSource for OnDemandGroups {
    fn group(&self, q: u64) -> Result<Cow<'_, CharacterGroup>> {
        CharacterGroup::new(q).map(Cow::Owned)
    }
}

/// All groups for `1 <= q <= max`, built up front.
#[derive(Debug, Clone)]
pub struct GroupCache {
    groups: Vec<CharacterGroup>,
}

impl GroupCache {
    pub fn up_to(max: u64) -> Result<Self> {
        let groups = (1..=max).map(CharacterGroup::new).collect::<Result<_>>()?;
        Ok(Self { groups })
    }
}

impl GroupSource for GroupCache {
    fn group(&self, q: u64) -> Result<Cow<'_, CharacterGroup>> {
        match q.checked_sub(1).and_then(|i| self.groups.get(i as usize)) {
            Some(g) => Ok(Cow::Borrowed(g)),
            None => CharacterGroup::new(q).map(Cow::Owned),
        }
    }
}

fn local_part(p: u64, k: u32) -> LocalPart {
    let modulus = p.pow(k);
    let m = modulus as usize;
    if p == 2 {
        let (gens, dlogs) = match k {
            1 => (Vec::new(), Vec::new()),
            2 => {
                let mut d = vec![NOT_COPRIME; 4];
                d[1] = 0;
                d[3] = 1;
                (vec![(3, 2, FactorRole::TwoMinusOne)], d)
            }
            _ => {
                let half = modulus / 4;
                let mut d = vec![NOT_COPRIME; 2 * m];
                let mut x = 1u64;
                for j in 0..half {
                    d[2 * x as usize] = 0;
                    d[2 * x as usize + 1] = j as u32;
                    let neg = (modulus - x) as usize;
                    d[2 * neg] = 1;
                    d[2 * neg + 1] = j as u32;
                    x = x * 5 % modulus;
                }
                (vec![(modulus - 1, 2, FactorRole::TwoMinusOne), (5, half, FactorRole::TwoFive)], d)
            }
        };
        return LocalPart { prime: p, exponent: k, modulus, gens, dlogs };
    }

    let order = (p - 1) * p.pow(k - 1);
    let g = primitive_root_prime_power(p, k);
    let mut dlogs = vec![NOT_COPRIME; m];
    let mut x = 1u64;
    for j in 0..order {
        dlogs[x as usize] = j as u32;
        x = x * g % modulus;
    }
    LocalPart { prime: p, exponent: k, modulus, gens: vec![(g, order, FactorRole::OddPrimePower)], dlogs }
}

fn pow_mod(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc
}

/// Smallest primitive root mod p, adjusted to generate mod p^k.
fn primitive_root_prime_power(p: u64, k: u32) -> u64 {
    let order = p - 1;
    let prime_divisors: Vec<u64> = factorize(order).expect("p - 1 > 0").into_iter().map(|(r, _)| r).collect();
    let g = (1..p)
        .find(|&g| prime_divisors.iter().all(|&r| pow_mod(g, order / r, p) != 1))
        .expect("every odd prime has a primitive root");
    if k >= 2 && pow_mod(g, p - 1, p * p) == 1 {
        g + p
    } else {
        g
    }
}

/// The residue mod `m * cofactor` that is `g` mod `m` and 1 mod `cofactor`.
fn crt_lift(g: u64, m: u64, cofactor: u64) -> u64 {
    if cofactor == 1 {
        return g % m;
    }
    let q = m * cofactor;
    let inv = mod_inverse(cofactor % m, m);
    let shift = ((g + m - 1) % m) * inv % m;
    (1 + cofactor * shift) % q
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let e = (a as i64).extended_gcd(&(m as i64));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i64) as u64
}
