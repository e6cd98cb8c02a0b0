//! Harvesting primes `p = d k + 1` with `d | L`, and choosing the `k` that
//! yields the most of them.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, euler_phi_u64, Natural};
use crate::lbuilder::Modulus;

/// Default refusal threshold for divisor enumeration.
pub const DEFAULT_DIVISOR_LIMIT: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("modulus has more than {limit} divisors below the cap")]
    TooManyDivisors { limit: usize },
    #[error("no viable k: every pool in [{k_min}, {k_max}] is empty")]
    NoViableK { k_min: u64, k_max: u64 },
    #[error("invalid harvest request: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestEntry {
    pub p: Natural,
    /// Smallest divisor `d | L` with `p = d k + 1`.
    pub d: Natural,
}

/// The pool of primes `p = d k + 1`, `d | L`, for one `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestedPrimes {
    pub modulus: Natural,
    pub k: u64,
    pub cap: Natural,
    pub x_bound: Option<Natural>,
    pub entries: Vec<HarvestEntry>,
}

impl HarvestedPrimes {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn primes(&self) -> Vec<Natural> {
        self.entries.iter().map(|e| e.p.clone()).collect()
    }

    /// A pool given directly by its primes, for user-supplied moduli.
    pub fn from_primes(modulus: &Natural, k: u64, primes: &[Natural]) -> Self {
        let mut primes: Vec<Natural> = primes.to_vec();
        primes.sort();
        primes.dedup();
        let entries = primes
            .into_iter()
            .map(|p| {
                let d = (p.as_biguint() - 1u32) / k;
                HarvestEntry { p, d: d.into() }
            })
            .collect();
        HarvestedPrimes {
            modulus: modulus.clone(),
            k,
            cap: modulus.clone(),
            x_bound: None,
            entries,
        }
    }
}

/// Every divisor `d <= cap` of the modulus, in increasing order.
///
/// For squarefree moduli these are the subset products of the prime factors.
pub fn enumerate_divisors(l: &Modulus, cap: &Natural, limit: usize) -> Result<Vec<Natural>, HarvestError> {
    let cap = cap.as_biguint();
    if cap.is_zero() {
        return Err(HarvestError::Invalid("divisor cap must be >= 1".into()));
    }
    let factors: Vec<(BigUint, u32)> = l
        .factorization
        .factors()
        .iter()
        .map(|(p, e)| (p.as_biguint().clone(), *e))
        .collect();
    let mut out = vec![BigUint::one()];
    for (p, e) in &factors {
        let mut extended = Vec::new();
        for d in &out {
            let mut m = d.clone();
            for _ in 0..*e {
                m *= p;
                if &m > cap {
                    break;
                }
                extended.push(m.clone());
            }
        }
        out.extend(extended);
        if out.len() > limit {
            return Err(HarvestError::TooManyDivisors { limit });
        }
    }
    out.sort();
    Ok(out.into_iter().map(Natural::from).collect())
}

pub fn harvest_p_k(
    l: &Modulus,
    k: u64,
    cap: &Natural,
    x_bound: Option<&Natural>,
) -> Result<HarvestedPrimes, HarvestError> {
    if k == 0 {
        return Err(HarvestError::Invalid("k must be >= 1".into()));
    }
    let divisors = enumerate_divisors(l, cap, DEFAULT_DIVISOR_LIMIT)?;
    Ok(harvest_with_divisors(l, &divisors, k, cap, x_bound))
}

fn harvest_with_divisors(
    l: &Modulus,
    divisors: &[Natural],
    k: u64,
    cap: &Natural,
    x_bound: Option<&Natural>,
) -> HarvestedPrimes {
    let modulus = l.value.as_biguint();
    let mut entries: Vec<HarvestEntry> = Vec::new();
    for d in divisors {
        let p: BigUint = d.as_biguint() * k + 1u32;
        if let Some(x) = x_bound {
            if &p > x.as_biguint() {
                break;
            }
        }
        // Primes dividing L are never units mod L and cannot join a zero-sum set.
        if (modulus % &p).is_zero() {
            continue;
        }
        let p = Natural::from(p);
        if arith::is_prime(&p) {
            entries.push(HarvestEntry { p, d: d.clone() });
        }
    }
    // Divisors ascend, so the first witness seen for each p is the smallest.
    entries.sort_by(|a, b| a.p.cmp(&b.p));
    entries.dedup_by(|a, b| a.p == b.p);
    HarvestedPrimes {
        modulus: l.value.clone(),
        k,
        cap: cap.clone(),
        x_bound: x_bound.cloned(),
        entries,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct K0Selection {
    pub k0: u64,
    /// `(k, |P_k|)` for every scanned `k`, ascending.
    pub counts: Vec<(u64, usize)>,
    pub pool: HarvestedPrimes,
}

impl K0Selection {
    pub fn mean_count(&self) -> f64 {
        let total: usize = self.counts.iter().map(|(_, c)| c).sum();
        total as f64 / self.counts.len() as f64
    }
}

/// Scans `k` in `[k_min, k_max]` and keeps the largest pool (smallest `k` on ties).
pub fn select_k0(
    l: &Modulus,
    k_min: u64,
    k_max: u64,
    cap: &Natural,
    x_bound: Option<&Natural>,
) -> Result<K0Selection, HarvestError> {
    if k_min == 0 || k_min > k_max {
        return Err(HarvestError::Invalid(format!("empty or invalid k range [{k_min}, {k_max}]")));
    }
    let divisors = enumerate_divisors(l, cap, DEFAULT_DIVISOR_LIMIT)?;
    let counts: Vec<(u64, usize)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| (k, harvest_with_divisors(l, &divisors, k, cap, x_bound).len()))
        .collect();
    let (k0, best) = counts
        .iter()
        .copied()
        .fold((k_min, 0usize), |acc, (k, c)| if c > acc.1 { (k, c) } else { acc });
    if best == 0 {
        return Err(HarvestError::NoViableK { k_min, k_max });
    }
    let pool = harvest_with_divisors(l, &divisors, k0, cap, x_bound);
    Ok(K0Selection { k0, counts, pool })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrunTitchmarshEntry {
    pub d: u64,
    /// Number of `k` in the range with `d k + 1` prime and within the bound.
    pub count: u64,
    /// `2 z / (phi(d) ln(z / d))` with `z` the largest `d k + 1` considered.
    pub bound: f64,
    pub within: bool,
}

/// Sanity report: harvested counts per divisor against the Brun-Titchmarsh
/// bound in its Montgomery-Vaughan form `pi(z; d, 1) <= 2 z / (phi(d) ln(z/d))`.
pub fn brun_titchmarsh_report(
    l: &Modulus,
    k_min: u64,
    k_max: u64,
    cap: &Natural,
    x_bound: Option<&Natural>,
    sample: usize,
) -> Result<Vec<BrunTitchmarshEntry>, HarvestError> {
    let divisors = enumerate_divisors(l, cap, DEFAULT_DIVISOR_LIMIT)?;
    let x = x_bound.and_then(|x| x.to_u64()).unwrap_or(u64::MAX);
    let rows = divisors
        .iter()
        .filter_map(|d| d.to_u64())
        .filter(|&d| d >= 2)
        .take(sample)
        .filter_map(|d| {
            let z = d.checked_mul(k_max)?.checked_add(1)?.min(x);
            if z <= d {
                return None;
            }
            let count = (k_min..=k_max)
                .filter(|k| {
                    let p = d * k + 1;
                    p <= z && l.value.as_biguint() % p != BigUint::zero() && arith::is_prime_u64(p)
                })
                .count() as u64;
            let bound = 2.0 * z as f64 / (euler_phi_u64(d) as f64 * (z as f64 / d as f64).ln());
            Some(BrunTitchmarshEntry {
                d,
                count,
                bound,
                within: count as f64 <= bound.ceil(),
            })
        })
        .collect();
    Ok(rows)
}

/// Checks `k | p - 1` and `(p - 1) / k | L` for every entry.
pub fn entry_is_consistent(l: &Modulus, k: u64, entry: &HarvestEntry) -> bool {
    let p_minus_1 = entry.p.as_biguint() - 1u32;
    let (quotient, rem) = p_minus_1.div_rem(&BigUint::from(k));
    rem.is_zero() && quotient == *entry.d.as_biguint() && (l.value.as_biguint() % &quotient).is_zero()
}
