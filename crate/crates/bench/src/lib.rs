//! Fixtures shared by the benchmarks.

use korselt_core::arith;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` distinct odd primes below `bound` that are units modulo `m`, as residues.
pub fn unit_residues(m: u64, count: usize, bound: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = rng.gen_range(3..bound) | 1;
        if arith::is_prime_u64(p) && m % p != 0 && !out.contains(&(p % m)) {
            out.push(p % m);
        }
    }
    out
}

/// Odd 64-bit samples for primality timing.
pub fn odd_words(count: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen::<u64>() | 1).collect()
}
