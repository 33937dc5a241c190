//! Parallel evaluation of the variance over moduli.
//!
//! Each modulus is an independent task against the shared weight table.
//! Results are collected in ascending `q` and summed in that order, so the
//! totals do not depend on the number of worker threads.

use std::time::{Duration, Instant};

use bdh_core::characters::CharacterGroup;
use bdh_core::sum::KahanSum;
use bdh_core::variance::{
    per_modulus_characters, per_modulus_direct, relative_gap, residue_sums, MainTerm, WeightTable,
};
use rayon::prelude::*;

use crate::error::{LabError, Result};

/// Wall-clock limit for one report row.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    at: Instant,
    budget: Duration,
}

impl Deadline {
    pub fn after(budget: Duration) -> Self {
        Self { at: Instant::now() + budget, budget }
    }

    pub fn check(&self, what: &str) -> Result<()> {
        if Instant::now() > self.at {
            return Err(LabError::Resource(format!(
                "{what} exceeded the row budget of {} s",
                self.budget.as_secs_f64()
            )));
        }
        Ok(())
    }
}

/// Runs `f` on a pool of `threads` workers (0 picks the default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerModulus {
    pub q: u64,
    pub direct: f64,
    pub character: f64,
    /// Direct form against the alternative main term, when there is one.
    pub direct_alt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTotals {
    pub direct: f64,
    pub character: f64,
    pub direct_alt: Option<f64>,
    pub per_q: Vec<PerModulus>,
    /// Largest `|direct - character| / max(direct, 1)` over the moduli
    /// and the totals.
    pub max_gap: f64,
}

fn one_modulus(w: &WeightTable, q: u64, main: &MainTerm, deadline: &Deadline) -> Result<PerModulus> {
    deadline.check(&format!("variance at q = {q}"))?;
    let sums = residue_sums(w, q);
    let group = CharacterGroup::new(q)?;
    let coprime = group.coprime_residues();
    Ok(PerModulus {
        q,
        direct: per_modulus_direct(&sums, coprime, main.value),
        character: per_modulus_characters(&sums, &group, main.value),
        direct_alt: main.alternative.map(|m| per_modulus_direct(&sums, coprime, m)),
    })
}

/// Direct and character forms for every `q <= q_max`, in the current pool.
pub fn variance_totals(w: &WeightTable, q_max: u64, main: &MainTerm, deadline: &Deadline) -> Result<VarianceTotals> {
    if q_max == 0 {
        return Err(LabError::Config("Q must be at least 1".into()));
    }
    let per_q = (1..=q_max).into_par_iter().map(|q| one_modulus(w, q, main, deadline)).collect::<Result<Vec<_>>>()?;
    let direct = per_q.iter().map(|p| p.direct).collect::<KahanSum>().value();
    let character = per_q.iter().map(|p| p.character).collect::<KahanSum>().value();
    let direct_alt = main.alternative.map(|_| per_q.iter().filter_map(|p| p.direct_alt).collect::<KahanSum>().value());
    let max_gap =
        per_q.iter().map(|p| relative_gap(p.direct, p.character)).fold(relative_gap(direct, character), f64::max);
    Ok(VarianceTotals { direct, character, direct_alt, per_q, max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bdh_core::characters::OnDemandGroups;
    use bdh_core::variance::{bdh_variance_characters, bdh_variance_direct};
    use bdh_core::Complex64;

    fn table() -> WeightTable {
        let values = (0..900u32)
            .map(|i| {
                let f = f64::from(i);
                Complex64::new((f * 0.37).sin(), (f * 1.3).cos())
            })
            .collect();
        WeightTable::custom(1000.0, 0.1, values).unwrap()
    }

    #[test]
    fn matches_sequential_core_and_is_thread_independent() {
        let w = table();
        let main = MainTerm { value: Complex64::new(3.0, 1.0), alternative: Some(Complex64::new(5.0, 0.0)) };
        let far = Deadline::after(Duration::from_secs(600));
        let one = with_threads(1, || variance_totals(&w, 40, &main, &far)).unwrap().unwrap();
        let four = with_threads(4, || variance_totals(&w, 40, &main, &far)).unwrap().unwrap();
        assert_eq!(one, four);
        let seq = bdh_variance_direct(&w, 40, &main).unwrap();
        assert_eq!(one.direct, seq.total);
        let seq = bdh_variance_characters(&w, 40, &main, &OnDemandGroups).unwrap();
        assert_eq!(one.character, seq.total);
        let alt = bdh_variance_direct(&w, 40, &MainTerm::new(main.alternative.unwrap())).unwrap();
        assert_eq!(one.direct_alt, Some(alt.total));
        assert!(one.max_gap < 1e-10);
    }

    #[test]
    fn expired_deadline_is_a_resource_error() {
        let w = table();
        let gone = Deadline { at: Instant::now() - Duration::from_secs(1), budget: Duration::ZERO };
        let err = variance_totals(&w, 5, &MainTerm::new(Complex64::new(0.0, 0.0)), &gone).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
