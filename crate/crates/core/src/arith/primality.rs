//! Primality testing.
//!
//! Below 2^64 the strong-probable-prime test with the first twelve prime
//! bases is deterministic (no strong pseudoprime to all of them exists below
//! 3.3 * 10^24). Above 2^64 we run a Baillie-PSW test: a strong base-2 test
//! followed by a strong Lucas test with Selfridge's parameters. No BPSW
//! pseudoprime is known; `extra_rounds` adds seeded random-base strong tests
//! on top, each cutting the residual error by at least a factor of 4.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::modular::{mul_mod, pow_mod};
use super::Natural;

const SMALL_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

const MR_BASES_64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrimalityConfig {
    /// Additional random-base strong tests run after BPSW for inputs >= 2^64.
    pub extra_rounds: u32,
}

/// How trustworthy an `is_prime == true` answer is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    /// Deterministic answer (value below 2^64).
    Proven,
    /// Baillie-PSW probable prime.
    Probable,
}

pub fn certainty_of(n: &Natural) -> Certainty {
    if n.to_u64().is_some() {
        Certainty::Proven
    } else {
        Certainty::Probable
    }
}

pub fn is_prime(n: &Natural) -> bool {
    is_prime_with(n, &PrimalityConfig::default())
}

pub fn is_prime_with(n: &Natural, config: &PrimalityConfig) -> bool {
    match n.to_u64() {
        Some(v) => is_prime_u64(v),
        None => is_probable_prime_big(n.as_biguint(), config.extra_rounds),
    }
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 97 * 97 {
        return true;
    }
    let d = (n - 1) >> (n - 1).trailing_zeros();
    MR_BASES_64.iter().all(|&a| strong_probable_prime_u64(n, d, a))
}

fn strong_probable_prime_u64(n: u64, d: u64, a: u64) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    let mut t = d;
    while t != n - 1 {
        x = mul_mod(x, x, n);
        t <<= 1;
        if x == n - 1 {
            return true;
        }
        if x == 1 {
            return false;
        }
    }
    false
}

/// Baillie-PSW plus `extra_rounds` random-base strong tests.
///
/// Works for any size of input; callers below 2^64 should prefer
/// [`is_prime_u64`], which is deterministic.
pub fn is_probable_prime_big(n: &BigUint, extra_rounds: u32) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p_big = BigUint::from(p);
        if n == &p_big {
            return true;
        }
        if (n % &p_big).is_zero() {
            return false;
        }
    }
    if !strong_probable_prime_big(n, &two) {
        return false;
    }
    if !strong_lucas_probable_prime(n) {
        return false;
    }
    if extra_rounds > 0 {
        use num_bigint::RandBigInt;
        // Seeded from n so the answer is a pure function of the input.
        let seed = n.to_u64_digits().iter().fold(0x9e37_79b9_7f4a_7c15u64, |h, w| {
            h.rotate_left(17) ^ w.wrapping_mul(0xff51_afd7_ed55_8ccd)
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let upper = n - 2u32;
        for _ in 0..extra_rounds {
            let a = rng.gen_biguint_range(&two, &upper);
            if !strong_probable_prime_big(n, &a) {
                return false;
            }
        }
    }
    true
}

fn strong_probable_prime_big(n: &BigUint, a: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = a.modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
        if x == one {
            return false;
        }
    }
    false
}

/// Jacobi symbol (a / n) for odd positive n.
fn jacobi(a: &BigUint, n: &BigUint) -> i32 {
    let mut a = a % n;
    let mut n = n.clone();
    let mut result = 1;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            a >>= tz;
            let n_mod_8 = (&n % 8u32).to_u32().unwrap_or(0);
            if tz % 2 == 1 && (n_mod_8 == 3 || n_mod_8 == 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if (&a % 4u32) == BigUint::from(3u32) && (&n % 4u32) == BigUint::from(3u32) {
            result = -result;
        }
        a %= &n;
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

/// Residue of a signed integer modulo n.
fn signed_mod(v: i64, n: &BigUint) -> BigUint {
    let mag = BigUint::from(v.unsigned_abs()) % n;
    if v >= 0 || mag.is_zero() {
        mag
    } else {
        n - mag
    }
}

fn half_mod(x: BigUint, n: &BigUint) -> BigUint {
    if x.is_odd() {
        (x + n) >> 1
    } else {
        x >> 1
    }
}

/// Strong Lucas probable-prime test with Selfridge's method A parameters.
fn strong_lucas_probable_prime(n: &BigUint) -> bool {
    let root = n.sqrt();
    if &(&root * &root) == n {
        return false;
    }
    // D in 5, -7, 9, -11, ... with (D / n) = -1.
    let mut d_abs: i64 = 5;
    let mut sign = 1i64;
    let d = loop {
        let d = sign * d_abs;
        let j = jacobi(&signed_mod(d, n), n);
        if j == -1 {
            break d;
        }
        if j == 0 && BigUint::from(d_abs as u64) != *n {
            return false;
        }
        d_abs += 2;
        sign = -sign;
    };
    let q = (1 - d) / 4;
    let d_mod = signed_mod(d, n);
    let q_mod = signed_mod(q, n);

    let n_plus_1: BigUint = n + 1u32;
    let s = n_plus_1.trailing_zeros().unwrap_or(0);
    let k = &n_plus_1 >> s;

    // Left-to-right binary ladder for U_k, V_k with P = 1.
    let mut u = BigUint::one();
    let mut v = BigUint::one();
    let mut q_k = q_mod.clone();
    let bits = k.bits();
    for i in (0..bits - 1).rev() {
        // Double: U_2m = U_m V_m, V_2m = V_m^2 - 2 Q^m.
        u = (&u * &v) % n;
        let two_qk = (&q_k << 1) % n;
        v = ((&v * &v) % n + n - two_qk) % n;
        q_k = (&q_k * &q_k) % n;
        if k.bit(i) {
            // Increment: U_{m+1} = (U + V)/2, V_{m+1} = (D U + V)/2.
            let new_u = half_mod((&u + &v) % n, n);
            let new_v = half_mod(((&d_mod * &u) % n + &v) % n, n);
            u = new_u;
            v = new_v;
            q_k = (&q_k * &q_mod) % n;
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        let two_qk = (&q_k << 1) % n;
        v = ((&v * &v) % n + n - two_qk) % n;
        if v.is_zero() {
            return true;
        }
        q_k = (&q_k * &q_k) % n;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sieve(limit: usize) -> Vec<bool> {
        let mut flags = vec![true; limit + 1];
        flags[0] = false;
        if limit >= 1 {
            flags[1] = false;
        }
        let mut i = 2;
        while i * i <= limit {
            if flags[i] {
                let mut j = i * i;
                while j <= limit {
                    flags[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        flags
    }

    #[test]
    fn named_values() {
        assert!(is_prime(&Natural::from(2u64)));
        assert!(!is_prime(&Natural::from(561u64)));
        assert!(!is_prime(&Natural::from(1729u64)));
        assert!(!is_prime(&Natural::from(0u64)));
        assert!(!is_prime(&Natural::from(1u64)));
    }

    #[test]
    fn bpsw_path_agrees_with_sieve_on_small_values() {
        let flags = sieve(100_000);
        for (n, &expected) in flags.iter().enumerate() {
            assert_eq!(
                is_probable_prime_big(&BigUint::from(n), 0),
                expected,
                "BPSW disagrees at {n}"
            );
        }
    }

    #[test]
    fn u64_edge_values() {
        assert!(is_prime_u64(18_446_744_073_709_551_557)); // largest 64-bit prime
        assert!(!is_prime_u64(u64::MAX));
        // strong pseudoprime to bases 2..=37 would be > 2^64; these fool small base sets
        assert!(!is_prime_u64(3_215_031_751));
        assert!(!is_prime_u64(3_825_123_056_546_413_051));
    }

    #[test]
    fn big_known_primes_and_composites() {
        let m89 = (BigUint::one() << 89u32) - 1u32;
        let m127 = (BigUint::one() << 127u32) - 1u32;
        let m67 = (BigUint::one() << 67u32) - 1u32; // 193707721 * 761838257287
        assert!(is_probable_prime_big(&m89, 0));
        assert!(is_probable_prime_big(&m127, 3));
        assert!(!is_probable_prime_big(&m67, 0));
        assert!(!is_probable_prime_big(&(&m89 * &m127), 0));
        assert!(!is_probable_prime_big(&(&m89 * &m89), 0));
        let square = BigUint::from(4_294_967_291u64) * BigUint::from(4_294_967_291u64);
        assert!(!is_probable_prime_big(&square, 0));
        let natural: Natural = m127.into();
        assert_eq!(certainty_of(&natural), Certainty::Probable);
        assert!(is_prime(&natural));
    }
}
