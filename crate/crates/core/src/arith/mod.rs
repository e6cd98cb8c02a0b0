//! Integer primitives shared by every stage: primality, factorization,
//! Carmichael's lambda, and modular products.

mod factor;
pub mod modular;
mod natural;
mod primality;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use thiserror::Error;

pub use factor::{
    factorize, factorize_with, largest_prime_factor, largest_prime_factor_u64, FactorConfig,
    Factorization,
};
pub(crate) use factor::small_primes_to;
pub use natural::{ln_biguint, Natural};
pub use primality::{
    certainty_of, is_prime, is_prime_u64, is_prime_with, is_probable_prime_big, Certainty,
    PrimalityConfig,
};

#[derive(Debug, Error)]
pub enum ArithError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("factorization of {value} incomplete: could not split {unfactored}")]
    Incomplete {
        value: Natural,
        unfactored: Natural,
        partial: Factorization,
    },
    #[error("invalid factorization: {0}")]
    InvalidFactorization(String),
    #[error("not a natural number: {0:?}")]
    Parse(String),
}

/// Exponent of the unit group modulo the factored value.
pub fn carmichael_lambda(f: &Factorization) -> Natural {
    let two = BigUint::from(2u32);
    let mut acc = BigUint::one();
    for (p, e) in f.factors() {
        let p = p.as_biguint();
        let part = if *p == two {
            match e {
                1 => BigUint::one(),
                2 => two.clone(),
                _ => BigUint::one() << (e - 2),
            }
        } else {
            num_traits::pow(p.clone(), (*e - 1) as usize) * (p - 1u32)
        };
        acc = acc.lcm(&part);
    }
    acc.into()
}

/// Euler's totient of the factored value.
pub fn euler_phi(f: &Factorization) -> Natural {
    let mut acc = BigUint::one();
    for (p, e) in f.factors() {
        let p = p.as_biguint();
        acc *= num_traits::pow(p.clone(), (*e - 1) as usize) * (p - 1u32);
    }
    acc.into()
}

/// Euler's totient of a machine word, by trial division.
pub fn euler_phi_u64(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}
