//! Computational kernels for Barban–Davenport–Halberstam type variance
//! statistics: weighted prime sums in arithmetic progressions, optionally
//! twisted by `e(t n^c)` and restricted to Piatetski-Shapiro numbers.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! file system, threads or the clock lives in the `bdh-lab` companion crate.
//!
//! Module map:
//!
//! * [`arith`] sieving, von Mangoldt, Euler's totient, factorization
//! * [`characters`] the full Dirichlet character group mod q
//! * [`psprimes`] Piatetski-Shapiro membership and enumeration
//! * [`oscillatory`] `e(x)`, phase reduction, the sawtooth, Vaaler's
//!   trigonometric approximation and the oscillatory main-term integral
//! * [`variance`] weight tables, the direct and character forms of the
//!   variance, and the large sieve check
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod arith;
pub mod characters;
mod ddouble;
mod error;
mod hiprec;
pub mod oscillatory;
pub mod psprimes;
pub mod sum;
pub mod variance;

pub use error::{Error, Result};
pub use num_complex::Complex64;
