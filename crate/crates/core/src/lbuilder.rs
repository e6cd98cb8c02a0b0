//! The modulus `L`: product of the smooth-shifted primes, its lambda, and
//! the size bounds it is expected to satisfy.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, carmichael_lambda, modular::cmp_exp, ArithError, Factorization, Natural};
use crate::harvest::{enumerate_divisors, HarvestError};
use crate::rational::Rational;
use crate::sieve::{density_report, SieveParams, SmoothPrimeSet};

#[derive(Debug, Error)]
pub enum ModulusError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Harvest(#[from] HarvestError),
}

/// A modulus together with its factorization and Carmichael lambda.
///
/// Moduli built from smooth primes are squarefree; a user-supplied modulus
/// may carry higher prime powers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modulus {
    pub value: Natural,
    pub factorization: Factorization,
    pub lambda: Natural,
}

impl Modulus {
    /// Squarefree modulus from distinct primes (any order).
    pub fn from_primes<I: IntoIterator<Item = Natural>>(primes: I) -> Result<Self, ModulusError> {
        let set: BTreeSet<Natural> = primes.into_iter().collect();
        if set.is_empty() {
            return Err(ModulusError::Domain("modulus needs at least one prime factor".into()));
        }
        for p in &set {
            if !arith::is_prime(p) {
                return Err(ModulusError::Domain(format!("{p} is not prime")));
            }
        }
        let factorization = Factorization::from_pairs(set.into_iter().map(|p| (p, 1)).collect());
        Ok(Self::from_factorization(factorization))
    }

    /// Modulus from an arbitrary value `>= 2`, factoring it.
    pub fn from_value(value: &Natural) -> Result<Self, ModulusError> {
        let factorization = arith::factorize(value)?;
        Ok(Self::from_factorization(factorization))
    }

    fn from_factorization(factorization: Factorization) -> Self {
        let lambda = carmichael_lambda(&factorization);
        Modulus {
            value: factorization.value(),
            factorization,
            lambda,
        }
    }

    pub fn prime_factors(&self) -> Vec<Natural> {
        self.factorization.primes().cloned().collect()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factorization.is_squarefree()
    }

    /// Checks value, factorization, and lambda agree.
    pub fn validate(&self) -> Result<(), ModulusError> {
        self.factorization.validate()?;
        if self.factorization.value() != self.value {
            return Err(ModulusError::Domain("value differs from factor product".into()));
        }
        if carmichael_lambda(&self.factorization) != self.lambda {
            return Err(ModulusError::Domain("lambda inconsistent with factors".into()));
        }
        Ok(())
    }

    /// `sum over q | L of 1/(q - 1)`.
    pub fn reciprocal_sum(&self) -> f64 {
        self.factorization
            .primes()
            .map(|q| 1.0 / (q.to_f64().unwrap_or(f64::INFINITY) - 1.0))
            .sum()
    }
}

/// Multiplies the primes of `q` not listed in `excluded`.
pub fn assemble_l(q: &SmoothPrimeSet, excluded: &BTreeSet<Natural>) -> Result<Modulus, ModulusError> {
    if let Some(bad) = excluded.iter().find(|e| !q.primes.contains(e)) {
        return Err(ModulusError::Domain(format!("excluded prime {bad} is not in Q")));
    }
    let kept: Vec<Natural> = q
        .primes
        .iter()
        .filter(|p| !excluded.contains(*p))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(ModulusError::Domain(
            "empty product: L must have at least one prime factor".into(),
        ));
    }
    Modulus::from_primes(kept)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaBoundReport {
    pub lambda: Natural,
    /// Exponent `2 theta y` of the bound `e^(2 theta y)`.
    pub bound_exponent: Rational,
    pub holds: bool,
    pub ln_lambda: f64,
    pub ln_l: f64,
    /// Density ratio used in place of the nonconstructive constant.
    pub gamma: f64,
    /// `ln` of `y^(2 theta gamma y^theta / ln y)`.
    pub ln_l_shape_bound: f64,
    pub l_within_shape: bool,
    pub reciprocal_sum: f64,
}

/// Compares `lambda(L)` against `e^(2 theta y)` exactly and reports `L`
/// against `y^(2 theta gamma y^theta / ln y)` with the measured density.
pub fn lambda_bound_check(l: &Modulus, q: &SmoothPrimeSet) -> LambdaBoundReport {
    let params: SieveParams = q.params;
    let num = 2 * params.y * params.theta.num();
    let den = params.theta.den();
    let holds = cmp_exp(l.lambda.as_biguint(), num, den) != Ordering::Greater;
    let gamma = density_report(q);
    let theta = params.theta.to_f64();
    // ln(y^(2 theta gamma y^theta / ln y)) = 2 theta gamma y^theta
    let ln_l_shape_bound = 2.0 * theta * gamma * params.y_pow_theta();
    let ln_l = l.value.ln();
    LambdaBoundReport {
        lambda: l.lambda.clone(),
        bound_exponent: Rational::new(num, den),
        holds,
        ln_lambda: l.lambda.ln(),
        ln_l,
        gamma,
        ln_l_shape_bound,
        l_within_shape: ln_l <= ln_l_shape_bound,
        reciprocal_sum: l.reciprocal_sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Divisors are sampled from `d <= x^b`.
    pub b: Rational,
    pub seed: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            b: Rational::new(5, 12),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneEntry {
    pub d: u64,
    /// Primes `p <= x` with `p = 1 (mod d)`.
    pub count: u64,
    pub phi_d: u64,
    /// Present when `2 phi(d) count < pi(x)`.
    pub removed: Option<Natural>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneLog {
    pub x: u64,
    pub pi_x: u64,
    pub divisor_cap: u64,
    pub tested: Vec<PruneEntry>,
    pub removed: Vec<Natural>,
}

/// Removes primes of `L` that sit in divisors with too few primes `= 1 (mod d)` below `x`.
pub fn prune_exceptional(
    l: &Modulus,
    x: u64,
    sample_divisors: usize,
    config: &PruneConfig,
) -> Result<(Modulus, PruneLog), ModulusError> {
    if x < 2 {
        return Err(ModulusError::Domain(format!("x = {x} must be >= 2")));
    }
    let cap = num_traits::pow(BigUint::from(x), config.b.num() as usize).nth_root(config.b.den() as u32);
    let cap_u64 = cap.to_u64().unwrap_or(u64::MAX);
    let mut log = PruneLog {
        x,
        pi_x: 0,
        divisor_cap: cap_u64,
        tested: Vec::new(),
        removed: Vec::new(),
    };
    if sample_divisors == 0 {
        return Ok((l.clone(), log));
    }

    let mut divisors: Vec<u64> = enumerate_divisors(l, &Natural::from(cap), usize::MAX)?
        .into_iter()
        .filter(|d| !d.is_one())
        .map(|d| d.to_u64().expect("divisor below cap"))
        .collect();
    if divisors.len() > sample_divisors {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        divisors.shuffle(&mut rng);
        divisors.truncate(sample_divisors);
        divisors.sort_unstable();
    }

    let primes: Vec<u64> = arith::small_primes_to(x).collect();
    log.pi_x = primes.len() as u64;
    let mut removed = BTreeSet::new();
    for d in divisors {
        let count = primes.iter().filter(|&&p| p % d == 1).count() as u64;
        let f = arith::factorize(&d.into())?;
        let phi_d = arith::euler_phi(&f).to_u64().expect("phi(d) <= d");
        let fails = 2 * phi_d as u128 * (count as u128) < log.pi_x as u128;
        let victim = if fails {
            let q = f.primes().last().expect("d > 1").clone();
            removed.insert(q.clone());
            Some(q)
        } else {
            None
        };
        log.tested.push(PruneEntry {
            d,
            count,
            phi_d,
            removed: victim,
        });
    }
    log.removed = removed.iter().cloned().collect();
    let kept: Vec<Natural> = l
        .factorization
        .primes()
        .filter(|p| !removed.contains(*p))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(ModulusError::Domain("pruning removed every prime of L".into()));
    }
    let pruned = if removed.is_empty() {
        l.clone()
    } else {
        Modulus::from_primes(kept)?
    };
    Ok((pruned, log))
}
