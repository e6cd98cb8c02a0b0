//! Modular products, inverses, and exact comparisons against powers of e.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

pub fn inv_mod_big(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    if m.is_one() {
        return Some(BigUint::zero());
    }
    let m_int = BigInt::from_biguint(Sign::Plus, m.clone());
    let a_int = BigInt::from_biguint(Sign::Plus, a % m);
    let egcd = a_int.extended_gcd(&m_int);
    if !egcd.gcd.is_one() {
        return None;
    }
    egcd.x.mod_floor(&m_int).to_biguint()
}

/// Product of `values` reduced modulo `m`.
pub fn product_mod<'a, I>(values: I, m: &BigUint) -> BigUint
where
    I: IntoIterator<Item = &'a BigUint>,
{
    values
        .into_iter()
        .fold(BigUint::one() % m, |acc, v| (acc * v) % m)
}

/// Fixed-point enclosure `[lo, hi]` of `e * 2^prec`.
fn e_enclosure(prec: u64) -> (BigUint, BigUint) {
    let mut term = BigUint::one() << prec;
    let mut sum = BigUint::zero();
    let mut k = 0u64;
    while !term.is_zero() {
        sum += &term;
        k += 1;
        term /= k;
    }
    // Each truncated term loses < 1 and the omitted tail is < 1.
    let hi = &sum + BigUint::from(k + 2);
    (sum, hi)
}

/// Compares `value` against `e^(num/den)` exactly.
///
/// The comparison is made between `value^den` and `e^num` using a rigorous
/// rational enclosure of `e`, refined until the enclosure separates them.
/// Equality is only possible for `value = 1, num = 0`.
pub fn cmp_exp(value: &BigUint, num: u64, den: u64) -> Ordering {
    assert!(den > 0, "denominator must be positive");
    if num == 0 {
        return value.cmp(&BigUint::one());
    }
    if value.is_zero() {
        return Ordering::Less;
    }
    let lhs = num_traits::pow(value.clone(), den as usize);
    let mut prec = 64u64;
    loop {
        let (lo, hi) = e_enclosure(prec);
        let lo_pow = num_traits::pow(lo, num as usize);
        let hi_pow = num_traits::pow(hi, num as usize);
        let scaled = &lhs << (prec * num);
        if scaled < lo_pow {
            return Ordering::Less;
        }
        if scaled > hi_pow {
            return Ordering::Greater;
        }
        prec *= 2;
        if prec > 1 << 20 {
            // Unreachable for integer inputs; e^num is transcendental.
            let a = super::natural::ln_biguint(value) * den as f64;
            return a.partial_cmp(&(num as f64)).unwrap_or(Ordering::Equal);
        }
    }
}

/// Smallest integer `m >= 0` with `e^m >= n`, i.e. `ceil(ln n)` for `n >= 1`.
pub fn ceil_ln(n: &BigUint) -> u64 {
    assert!(!n.is_zero(), "ln of zero");
    let approx = super::natural::ln_biguint(n);
    let mut m = (approx.floor() as i64 - 1).max(0) as u64;
    while cmp_exp(n, m, 1) == Ordering::Greater {
        m += 1;
    }
    m
}
