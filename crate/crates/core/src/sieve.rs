//! The set of primes `q` in `[y^theta / ln y, y^theta]` whose shifted value
//! `q - 1` is `y`-smooth.

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{small_primes_to, Natural};
use crate::rational::Rational;

const SEGMENT: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("invalid sieve parameters: {0}")]
    InvalidParams(String),
    #[error("interval upper bound {upper} exceeds the configured cap {cap}")]
    TooLarge { upper: String, cap: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SieveParams {
    pub y: u64,
    pub theta: Rational,
}

impl SieveParams {
    pub fn new(y: u64, theta: Rational) -> Result<Self, SieveError> {
        let params = SieveParams { y, theta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), SieveError> {
        if self.y < 3 {
            return Err(SieveError::InvalidParams(format!("y = {} must be >= 3", self.y)));
        }
        if !(self.theta.gt_int(1) && self.theta.lt_int(2)) {
            return Err(SieveError::InvalidParams(format!(
                "theta = {} must lie strictly between 1 and 2",
                self.theta
            )));
        }
        Ok(())
    }

    /// `floor(y^theta)`, computed exactly as an integer root.
    pub fn upper_exact(&self) -> BigUint {
        let power = num_traits::pow(BigUint::from(self.y), self.theta.num() as usize);
        power.nth_root(self.theta.den() as u32)
    }

    pub fn y_pow_theta(&self) -> f64 {
        (self.y as f64).powf(self.theta.to_f64())
    }

    /// `ceil(y^theta / ln y)`. The quotient is transcendental, so it is never
    /// an integer and double precision decides the ceiling.
    pub fn lower(&self) -> u64 {
        (self.y_pow_theta() / (self.y as f64).ln()).ceil() as u64
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SieveConfig {
    /// Largest permitted interval upper bound.
    pub max_upper: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            max_upper: 1_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothPrimeSet {
    pub params: SieveParams,
    pub primes: Vec<Natural>,
}

impl SmoothPrimeSet {
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

pub fn build_q(params: SieveParams) -> Result<SmoothPrimeSet, SieveError> {
    build_q_with(params, &SieveConfig::default())
}

pub fn build_q_with(params: SieveParams, config: &SieveConfig) -> Result<SmoothPrimeSet, SieveError> {
    params.validate()?;
    let upper_big = params.upper_exact();
    let upper = match upper_big.to_u64() {
        Some(u) if u <= config.max_upper => u,
        _ => {
            return Err(SieveError::TooLarge {
                upper: upper_big.to_string(),
                cap: config.max_upper,
            })
        }
    };
    let lower = params.lower().max(2);
    if lower > upper {
        return Ok(SmoothPrimeSet {
            params,
            primes: Vec::new(),
        });
    }

    let base_primes: Vec<u64> = small_primes_to(upper.sqrt()).collect();
    let smooth_primes: Vec<u64> = small_primes_to(params.y).collect();

    let starts: Vec<u64> = (lower..=upper).step_by(SEGMENT as usize).collect();
    let mut found: Vec<u64> = starts
        .into_par_iter()
        .flat_map_iter(|start| {
            let end = (start + SEGMENT - 1).min(upper);
            sieve_segment(start, end, &base_primes, &smooth_primes)
        })
        .collect();
    found.sort_unstable();
    Ok(SmoothPrimeSet {
        params,
        primes: found.into_iter().map(Natural::from).collect(),
    })
}

/// Primes `q` in `[start, end]` with `q - 1` free of primes above `y`.
fn sieve_segment(start: u64, end: u64, base_primes: &[u64], smooth_primes: &[u64]) -> Vec<u64> {
    let len = (end - start + 1) as usize;
    let mut is_prime = vec![true; len];
    for (i, flag) in is_prime.iter_mut().enumerate() {
        if start + (i as u64) < 2 {
            *flag = false;
        }
    }
    for &p in base_primes {
        let first = (p * p).max(start.div_ceil(p) * p);
        let mut m = first;
        while m <= end {
            is_prime[(m - start) as usize] = false;
            m += p;
        }
    }

    // Cofactors of q - 1 after removing every prime <= y.
    let shifted_start = start - 1;
    let mut cofactor: Vec<u64> = (0..len as u64).map(|i| shifted_start + i).collect();
    for &p in smooth_primes {
        let mut m = shifted_start.div_ceil(p) * p;
        while m < end {
            let slot = &mut cofactor[(m - shifted_start) as usize];
            while *slot != 0 && *slot % p == 0 {
                *slot /= p;
            }
            m += p;
        }
    }

    (0..len)
        .filter(|&i| is_prime[i] && cofactor[i] == 1)
        .map(|i| start + i as u64)
        .collect()
}

/// `|Q| / (y^theta / ln(y^theta))`. Observational only.
pub fn density_report(q: &SmoothPrimeSet) -> f64 {
    if q.is_empty() {
        return 0.0;
    }
    let x = q.params.y_pow_theta();
    q.len() as f64 / (x / x.ln())
}
