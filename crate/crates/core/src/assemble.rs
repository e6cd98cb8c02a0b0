//! Assembly of Carmichael numbers from disjoint zero-sum sets, Korselt
//! verification, and the Chernick `(6k+1)(12k+1)(18k+1)` baseline.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_integer::{Integer, Roots};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::arith::{self, Certainty, Natural};
use crate::extraprime::ExtraPrime;

/// Seed of the redundant Fermat spot-check inside [`verify_korselt`].
const FERMAT_SEED: u64 = 0x006b_6f72_7365_6c74;
const FERMAT_ROUNDS: usize = 20;

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("invalid assembly input: {0}")]
    Domain(String),
    #[error("no g <= {g_max} makes {h} * g + 1 a prime count")]
    NoG0 { h: u64, g_max: u64 },
    /// An upstream invariant was broken; the offending factor is named.
    #[error("Korselt check failed at factor {factor}: {reason}")]
    Korselt { factor: Natural, reason: String },
}

/// Class of a factor count as reported on certificates. A count belongs to
/// the first class it fits, in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountClass {
    Prime,
    PerfectSquare,
    PerfectCube,
    PerfectPower,
    None,
}

impl CountClass {
    pub fn of(count: u64) -> Self {
        if arith::is_prime_u64(count) {
            CountClass::Prime
        } else if is_perfect_power(count, 2) {
            CountClass::PerfectSquare
        } else if is_perfect_power(count, 3) {
            CountClass::PerfectCube
        } else if (4..=63).any(|e| is_perfect_power(count, e)) {
            CountClass::PerfectPower
        } else {
            CountClass::None
        }
    }
}

/// Factor-count class requested of the assembler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetClass {
    Prime,
    /// Perfect `e`-th power, `e >= 2`.
    Power(u32),
}

impl TargetClass {
    pub const SQUARE: TargetClass = TargetClass::Power(2);
    pub const CUBE: TargetClass = TargetClass::Power(3);

    pub fn matches(&self, count: u64) -> bool {
        match *self {
            TargetClass::Prime => arith::is_prime_u64(count),
            TargetClass::Power(e) => is_perfect_power(count, e),
        }
    }

    /// Whether the extra prime is part of the construction: it shifts the
    /// count to `g h + 1`, which is what the prime class needs; the power
    /// classes use `g h` alone.
    pub fn uses_extra_prime(&self) -> bool {
        matches!(self, TargetClass::Prime)
    }
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetClass::Prime => f.write_str("prime"),
            TargetClass::Power(2) => f.write_str("square"),
            TargetClass::Power(3) => f.write_str("cube"),
            TargetClass::Power(e) => write!(f, "power:{e}"),
        }
    }
}

impl FromStr for TargetClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "prime" => Ok(TargetClass::Prime),
            "square" | "perfect_square" => Ok(TargetClass::SQUARE),
            "cube" | "perfect_cube" => Ok(TargetClass::CUBE),
            other => {
                let e = other
                    .strip_prefix("power:")
                    .and_then(|e| e.parse::<u32>().ok())
                    .filter(|&e| e >= 2)
                    .ok_or_else(|| format!("unknown count class {other:?} (prime, square, cube, power:<e>)"))?;
                Ok(TargetClass::Power(e))
            }
        }
    }
}

impl Serialize for TargetClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TargetClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub fn is_perfect_power(n: u64, e: u32) -> bool {
    if e < 2 {
        return true;
    }
    let r = n.nth_root(e);
    r.checked_pow(e) == Some(n)
}

/// Number of sets `g` to combine for set size `h`.
///
/// Prime class: the least `g <= g_max` with `g h + 1` prime and at least 3.
/// Power class `e`: the least `g` making `g h` an `e`-th power and at least 3;
/// it divides `h^(e-1)`, so `g = h^(e-1)` always works (e.g. `g = h` for squares).
pub fn find_g0(h: u64, class: TargetClass, g_max: u64) -> Result<u64, AssembleError> {
    if h == 0 {
        return Err(AssembleError::Domain("h must be >= 1".into()));
    }
    let mut g = 1u64;
    while g <= g_max {
        let Some(count) = g.checked_mul(h) else { break };
        let ok = match class {
            TargetClass::Prime => count
                .checked_add(1)
                .is_some_and(|c| c >= 3 && arith::is_prime_u64(c)),
            TargetClass::Power(e) => count >= 3 && is_perfect_power(count, e),
        };
        if ok {
            return Ok(g);
        }
        g += 1;
    }
    Err(AssembleError::NoG0 { h, g_max })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarmichaelCertificate {
    pub n: Natural,
    pub factors: Vec<Natural>,
    pub g: u64,
    pub h: u64,
    pub includes_extra_prime: bool,
    pub factor_count: u64,
    pub count_class: CountClass,
    /// `(n - 1) / (p - 1)` for each factor, in factor order.
    pub korselt_witnesses: Vec<Natural>,
    /// `probable` when any factor is above 2^64.
    pub primality: Certainty,
}

impl CarmichaelCertificate {
    /// Rebuilds the certificate from its factor list alone and compares.
    pub fn recheck(&self) -> bool {
        let Ok(report) = verify_korselt(&self.factors) else {
            return false;
        };
        report.passed
            && report.n == self.n
            && report.witnesses == self.korselt_witnesses
            && self.factor_count == self.factors.len() as u64
            && self.count_class == CountClass::of(self.factor_count)
            && self.factor_count
                == self.g * self.h + u64::from(self.includes_extra_prime)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KorseltFailure {
    NotPrime { factor: Natural },
    Repeated { factor: Natural },
    TooFewFactors { count: usize },
    EvenProduct,
    NotDividing { factor: Natural },
}

impl fmt::Display for KorseltFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KorseltFailure::NotPrime { factor } => write!(f, "{factor} is not prime"),
            KorseltFailure::Repeated { factor } => write!(f, "{factor} appears more than once"),
            KorseltFailure::TooFewFactors { count } => write!(f, "{count} factors; at least 3 required"),
            KorseltFailure::EvenProduct => f.write_str("product is even"),
            KorseltFailure::NotDividing { factor } => write!(f, "{factor} - 1 does not divide n - 1"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KorseltReport {
    pub n: Natural,
    pub passed: bool,
    pub failures: Vec<KorseltFailure>,
    /// Exact quotients `(n - 1) / (p - 1)`; empty unless every factor divides.
    pub witnesses: Vec<Natural>,
    pub fermat_checked: usize,
    pub fermat_passed: usize,
}

/// Korselt's criterion on an explicit factor list, plus a redundant seeded
/// Fermat check `a^n = a (mod n)` that never decides the outcome.
pub fn verify_korselt(factors: &[Natural]) -> Result<KorseltReport, AssembleError> {
    if factors.len() < 2 {
        return Err(AssembleError::Domain(format!(
            "need at least 2 factors, got {}",
            factors.len()
        )));
    }
    let mut failures = Vec::new();
    let mut seen = BTreeSet::new();
    for p in factors {
        if !seen.insert(p) {
            failures.push(KorseltFailure::Repeated { factor: p.clone() });
        }
        if !arith::is_prime(p) {
            failures.push(KorseltFailure::NotPrime { factor: p.clone() });
        }
    }
    if factors.len() < 3 {
        failures.push(KorseltFailure::TooFewFactors { count: factors.len() });
    }
    let n: BigUint = factors.iter().map(|p| p.as_biguint()).product();
    if n.is_even() {
        failures.push(KorseltFailure::EvenProduct);
    }
    let n_minus_1 = &n - 1u32;
    let mut witnesses = Vec::with_capacity(factors.len());
    for p in factors {
        let pm1 = p.as_biguint() - 1u32;
        if pm1.is_zero() {
            continue;
        }
        let (q, r) = n_minus_1.div_rem(&pm1);
        if r.is_zero() {
            witnesses.push(q.into());
        } else {
            failures.push(KorseltFailure::NotDividing { factor: p.clone() });
        }
    }
    if witnesses.len() != factors.len() {
        witnesses.clear();
    }
    let (fermat_checked, fermat_passed) = fermat_spot_check(&n);
    let passed = failures.is_empty();
    debug_assert!(!passed || fermat_passed == fermat_checked, "Fermat contradicts Korselt for {n}");
    Ok(KorseltReport {
        n: n.into(),
        passed,
        failures,
        witnesses,
        fermat_checked,
        fermat_passed,
    })
}

fn fermat_spot_check(n: &BigUint) -> (usize, usize) {
    if n < &BigUint::from(3u32) {
        return (0, 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(FERMAT_SEED);
    let span = n - 2u32;
    let passed = (0..FERMAT_ROUNDS)
        .filter(|_| {
            let a = rng.gen_biguint_below(&span) + 2u32;
            a.modpow(n, n) == a
        })
        .count();
    (FERMAT_ROUNDS, passed)
}

/// Multiplies `g` disjoint zero-sum sets (and optionally the extra prime) into
/// a certified Carmichael number.
pub fn assemble_carmichael(
    sets: &[Vec<Natural>],
    extra: Option<&ExtraPrime>,
    m: &Natural,
) -> Result<CarmichaelCertificate, AssembleError> {
    let Some(h) = sets.first().map(Vec::len) else {
        return Err(AssembleError::Domain("no zero-sum sets given".into()));
    };
    if h == 0 || sets.iter().any(|s| s.len() != h) {
        return Err(AssembleError::Domain("sets must be nonempty and of equal size".into()));
    }
    let mod_m = m.as_biguint();
    if mod_m < &BigUint::from(2u32) {
        return Err(AssembleError::Domain("modulus must be >= 2".into()));
    }
    let mut members = BTreeSet::new();
    for (i, set) in sets.iter().enumerate() {
        for p in set {
            if !members.insert(p.clone()) {
                return Err(AssembleError::Domain(format!("{p} appears in more than one set (set {i})")));
            }
            if !(p.as_biguint() - 1u32).is_zero() && !(mod_m % (p.as_biguint() - 1u32)).is_zero() {
                return Err(AssembleError::Domain(format!("{p} - 1 does not divide M = {m}")));
            }
        }
        if !(arith::modular::product_mod(set.iter().map(|p| p.as_biguint()), mod_m)).is_one() {
            return Err(AssembleError::Domain(format!("set {i} does not multiply to 1 mod {m}")));
        }
    }
    if let Some(e) = extra {
        if members.contains(&e.p) {
            return Err(AssembleError::Domain(format!("extra prime {} also appears in a set", e.p)));
        }
        if &e.working_modulus() != m || &(e.p.as_biguint() - 1u32) != mod_m {
            return Err(AssembleError::Domain(format!(
                "extra prime {} does not satisfy P - 1 = M = {m}",
                e.p
            )));
        }
        members.insert(e.p.clone());
    }
    let factors: Vec<Natural> = members.into_iter().collect();
    if factors.len() < 3 {
        return Err(AssembleError::Domain(format!(
            "{} factors; a Carmichael number needs at least 3",
            factors.len()
        )));
    }
    let report = verify_korselt(&factors)?;
    if let Some(failure) = report.failures.first() {
        let factor = match failure {
            KorseltFailure::NotPrime { factor }
            | KorseltFailure::Repeated { factor }
            | KorseltFailure::NotDividing { factor } => factor.clone(),
            _ => report.n.clone(),
        };
        return Err(AssembleError::Korselt {
            factor,
            reason: failure.to_string(),
        });
    }
    if extra.is_some() {
        // M | n - 1, asserted by exact division.
        debug_assert!(((report.n.as_biguint() - 1u32) % mod_m).is_zero());
    }
    Ok(certificate(factors, report, sets.len() as u64, h as u64, extra.is_some()))
}

fn certificate(
    factors: Vec<Natural>,
    report: KorseltReport,
    g: u64,
    h: u64,
    includes_extra_prime: bool,
) -> CarmichaelCertificate {
    let factor_count = factors.len() as u64;
    let primality = if factors.iter().all(|p| arith::certainty_of(p) == Certainty::Proven) {
        Certainty::Proven
    } else {
        Certainty::Probable
    };
    CarmichaelCertificate {
        n: report.n,
        factors,
        g,
        h,
        includes_extra_prime,
        factor_count,
        count_class: CountClass::of(factor_count),
        korselt_witnesses: report.witnesses,
        primality,
    }
}

/// Certificates for every `k <= k_max` with `6k+1`, `12k+1`, `18k+1` all prime.
pub fn chernick_search(k_max: u64) -> Vec<CarmichaelCertificate> {
    (1..=k_max)
        .into_par_iter()
        .filter_map(|k| {
            let triple = [6 * k + 1, 12 * k + 1, 18 * k + 1];
            if !triple.iter().all(|&p| arith::is_prime_u64(p)) {
                return None;
            }
            let factors: Vec<Natural> = triple.iter().map(|&p| p.into()).collect();
            let report = verify_korselt(&factors).ok()?;
            assert!(report.passed, "Chernick triple for k = {k} failed Korselt");
            Some(certificate(factors, report, 1, 3, false))
        })
        .collect()
}
