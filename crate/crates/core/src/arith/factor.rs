//! Trial division followed by Brent's variant of Pollard rho.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::modular::mul_mod;
use super::primality::{is_prime_u64, is_probable_prime_big};
use super::{ArithError, Natural};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorConfig {
    /// Trial division runs over primes up to this bound.
    pub trial_bound: u64,
    /// Total rho iterations allowed before giving up with `Incomplete`.
    pub rho_budget: u64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            trial_bound: 10_000,
            rho_budget: 50_000_000,
        }
    }
}

/// Prime factorization as `(prime, exponent)` pairs with strictly increasing primes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    factors: Vec<(Natural, u32)>,
}

impl Factorization {
    /// Builds a factorization from arbitrary-order pairs, merging repeated primes.
    ///
    /// Does not test primality; use [`Factorization::validate`] for that.
    pub fn from_pairs(mut pairs: Vec<(Natural, u32)>) -> Self {
        pairs.retain(|(_, e)| *e > 0);
        pairs.sort();
        let mut factors: Vec<(Natural, u32)> = Vec::with_capacity(pairs.len());
        for (p, e) in pairs {
            match factors.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => factors.push((p, e)),
            }
        }
        Factorization { factors }
    }

    pub fn factors(&self) -> &[(Natural, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = &Natural> {
        self.factors.iter().map(|(p, _)| p)
    }

    pub fn value(&self) -> Natural {
        let mut acc = BigUint::one();
        for (p, e) in &self.factors {
            acc *= num_traits::pow(p.as_biguint().clone(), *e as usize);
        }
        acc.into()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|(_, e)| *e == 1)
    }

    /// Checks the ordering and primality invariants.
    pub fn validate(&self) -> Result<(), ArithError> {
        for w in self.factors.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(ArithError::InvalidFactorization(format!(
                    "primes not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        for (p, e) in &self.factors {
            if *e == 0 || !super::is_prime(p) {
                return Err(ArithError::InvalidFactorization(format!(
                    "{p}^{e} is not a prime power"
                )));
            }
        }
        Ok(())
    }
}

pub fn factorize(n: &Natural) -> Result<Factorization, ArithError> {
    factorize_with(n, &FactorConfig::default())
}

pub fn factorize_with(n: &Natural, config: &FactorConfig) -> Result<Factorization, ArithError> {
    if n.as_biguint() < &BigUint::from(2u32) {
        return Err(ArithError::Domain(format!("cannot factor {n}; need n >= 2")));
    }
    let mut found: Vec<(Natural, u32)> = Vec::new();
    let mut rest = n.as_biguint().clone();

    let push = |p: BigUint, found: &mut Vec<(Natural, u32)>| found.push((p.into(), 1));

    // Trial division.
    if let Some(small) = rest.to_u64() {
        let mut m = small;
        for p in small_primes_to(config.trial_bound) {
            if p * p > m {
                break;
            }
            while m % p == 0 {
                m /= p;
                push(BigUint::from(p), &mut found);
            }
        }
        rest = BigUint::from(m);
    } else {
        for p in small_primes_to(config.trial_bound) {
            let pb = BigUint::from(p);
            loop {
                let (q, r) = rest.div_rem(&pb);
                if !r.is_zero() {
                    break;
                }
                rest = q;
                push(pb.clone(), &mut found);
            }
        }
    }

    let mut budget = config.rho_budget;
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        let prime = match m.to_u64() {
            Some(v) => is_prime_u64(v),
            None => is_probable_prime_big(&m, 0),
        };
        if prime {
            push(m, &mut found);
            continue;
        }
        let divisor = match m.to_u64() {
            Some(v) => split_u64(v, &mut budget).map(BigUint::from),
            None => split_big(&m, &mut budget),
        };
        match divisor {
            Some(d) => {
                let q = &m / &d;
                stack.push(d);
                stack.push(q);
            }
            None => {
                let partial = Factorization::from_pairs(found);
                return Err(ArithError::Incomplete {
                    value: n.clone(),
                    unfactored: m.into(),
                    partial,
                });
            }
        }
    }
    Ok(Factorization::from_pairs(found))
}

pub fn largest_prime_factor(n: &Natural) -> Result<Natural, ArithError> {
    let f = factorize(n)?;
    Ok(f.factors.last().map(|(p, _)| p.clone()).expect("n >= 2 has a prime factor"))
}

/// Largest prime factor of a machine-word value, using pure trial division.
pub fn largest_prime_factor_u64(mut n: u64) -> u64 {
    assert!(n >= 2);
    let mut largest = 1;
    let mut p = 2u64;
    while p * p <= n {
        while n % p == 0 {
            largest = p;
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        largest = largest.max(n);
    }
    largest
}

pub(crate) fn small_primes_to(bound: u64) -> impl Iterator<Item = u64> {
    let limit = bound as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes.into_iter()
}

/// Finds a nontrivial divisor of an odd composite `n` (or 2 for even n).
fn split_u64(n: u64, budget: &mut u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    let f = |x: u64, c: u64| ((mul_mod(x, x, n) as u128 + c as u128) % n as u128) as u64;
    for c in 1..n {
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let steps = m.min(r - k);
                for _ in 0..steps {
                    y = f(y, c);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += steps;
                *budget = budget.checked_sub(steps)?;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys, c);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return Some(g);
        }
    }
    None
}

fn split_big(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let one = BigUint::one();
    let diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    let mut c = BigUint::one();
    loop {
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut r = 1u64;
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut x = y.clone();
        let mut ys = y.clone();
        let m = 128u64;
        while g == one {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                let steps = m.min(r - k);
                for _ in 0..steps {
                    y = f(&y);
                    q = (q * diff(&x, &y)) % n;
                }
                g = q.gcd(n);
                k += steps;
                *budget = budget.checked_sub(steps)?;
            }
            r *= 2;
        }
        if &g == n {
            loop {
                ys = f(&ys);
                g = diff(&x, &ys).gcd(n);
                if g > one {
                    break;
                }
            }
        }
        if &g != n {
            return Some(g);
        }
        c += 1u32;
    }
}
