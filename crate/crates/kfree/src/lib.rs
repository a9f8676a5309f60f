//! Certified-bounds and empirical-verification toolkit for gaps between
//! squarefree integers.
//!
//! The crate recomputes, with outward-rounded interval arithmetic, every
//! explicit constant in the proof chain that every interval
//! (x, x + 11x^(1/5) log x] contains a squarefree integer, searches for
//! optimal parameter sets, and independently validates the combinatorial
//! objects (squarefree gaps, the critical sets S(M,N), spacing lemmas) by
//! direct computation.

pub mod critical;
pub mod error;
pub mod interval;
pub mod monomial;
pub mod optimizer;
pub mod pipeline;
pub mod primes;
pub mod sieve;

pub use error::{Error, Result};
pub use interval::{CertInterval, ExactRational, DEFAULT_PREC};
pub use monomial::{Monomial, MonotoneClass};
