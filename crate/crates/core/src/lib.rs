//! Construction and certification of Carmichael numbers whose number of
//! prime factors falls in a prescribed class: prime, perfect square,
//! perfect cube, or any perfect power.
//!
//! The stages mirror the classical construction. A set of primes `q` with
//! smooth `q - 1` is sieved ([`sieve`]), multiplied into a modulus `L`
//! ([`lbuilder`]), and used to harvest primes `p = d k + 1` with `d | L`
//! ([`harvest`]). An extra prime `P = L k0 k1 + 1` is located
//! ([`extraprime`]), subsets of the harvested primes with product `1` modulo
//! `L k0 k1` are searched for ([`zerosum`]), and disjoint subsets plus `P`
//! are multiplied into a Korselt-certified Carmichael number ([`assemble`]).
//! [`pipeline`] runs the stages end to end and persists each one as a
//! line-delimited record.

pub mod arith;
pub mod assemble;
pub mod extraprime;
pub mod harvest;
pub mod lbuilder;
pub mod pipeline;
pub mod rational;
pub mod sieve;
pub mod zerosum;

pub use arith::{Factorization, Natural};
pub use assemble::{CarmichaelCertificate, CountClass};
pub use extraprime::ExtraPrime;
pub use harvest::HarvestedPrimes;
pub use lbuilder::Modulus;
pub use rational::Rational;
pub use sieve::{SieveParams, SmoothPrimeSet};
pub use zerosum::{GroupSpec, ZeroSumFamily};
