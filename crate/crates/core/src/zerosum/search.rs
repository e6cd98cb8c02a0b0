//! Search for `h`-subsets of a prime pool whose product is 1 modulo `M`.
//!
//! Small searches enumerate combinations directly. Larger ones split the
//! pool into two halves, index the products of one half by residue, and look
//! up the inverse of each product from the other half. When even a half is
//! too large to index, seeded random sub-pools are searched instead.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::group::binomial;
use crate::arith::modular::{inv_mod_big, inv_mod_u64, mul_mod};

/// Multiplicative residues modulo a fixed modulus.
pub trait ResidueRing: Sync {
    type Elem: Clone + Eq + Hash + Send + Sync;

    fn one(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
}

pub struct WordRing(pub u64);

impl ResidueRing for WordRing {
    type Elem = u64;

    fn one(&self) -> u64 {
        1 % self.0
    }

    fn mul(&self, a: &u64, b: &u64) -> u64 {
        mul_mod(*a, *b, self.0)
    }

    fn inv(&self, a: &u64) -> Option<u64> {
        inv_mod_u64(*a, self.0)
    }
}

pub struct BigRing(pub BigUint);

impl ResidueRing for BigRing {
    type Elem = BigUint;

    fn one(&self) -> BigUint {
        BigUint::one() % &self.0
    }

    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.0
    }

    fn inv(&self, a: &BigUint) -> Option<BigUint> {
        inv_mod_big(a, &self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Enumerate directly when `C(N, h)` is at most this.
    pub exhaustive_limit: u128,
    /// Largest half-index the meet-in-the-middle search may build.
    pub index_limit: u128,
    /// Sub-pool rounds when the full pool is too large to index.
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            exhaustive_limit: 2_000_000,
            index_limit: 2_000_000,
            max_rounds: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    MeetInTheMiddle,
    SampledMeetInTheMiddle,
}

pub fn choose_method(n: usize, h: usize, config: &SearchConfig) -> SearchMethod {
    if binomial(n as u64, h as u64) <= config.exhaustive_limit {
        SearchMethod::Exhaustive
    } else if half_index_size(n, h) <= config.index_limit {
        SearchMethod::MeetInTheMiddle
    } else {
        SearchMethod::SampledMeetInTheMiddle
    }
}

/// Largest number of entries any half-index needs for an `n`-pool and size `h`.
fn half_index_size(n: usize, h: usize) -> u128 {
    let right = n - n / 2;
    (0..=h.min(right))
        .map(|hb| binomial(right as u64, hb as u64))
        .max()
        .unwrap_or(0)
}

/// Finds up to `target` index sets of size `h` whose residues multiply to one.
///
/// Returned sets are sorted index vectors; the list itself is sorted.
pub fn search<R: ResidueRing>(
    ring: &R,
    residues: &[R::Elem],
    h: usize,
    target: usize,
    config: &SearchConfig,
) -> (Vec<Vec<usize>>, SearchMethod) {
    let method = choose_method(residues.len(), h, config);
    let mut sets = match method {
        SearchMethod::Exhaustive => exhaustive(ring, residues, h, target),
        SearchMethod::MeetInTheMiddle => meet_in_the_middle(ring, residues, h, target),
        SearchMethod::SampledMeetInTheMiddle => sampled(ring, residues, h, target, config),
    };
    sets.sort();
    (sets, method)
}

/// Lexicographic combination walk with prefix products.
pub fn exhaustive<R: ResidueRing>(ring: &R, residues: &[R::Elem], h: usize, target: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if h == 0 || h > residues.len() || target == 0 {
        return out;
    }
    let one = ring.one();
    let mut chosen = Vec::with_capacity(h);
    let mut prefix = vec![one.clone()];
    walk(ring, residues, h, 0, &mut chosen, &mut prefix, &one, target, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn walk<R: ResidueRing>(
    ring: &R,
    residues: &[R::Elem],
    h: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    prefix: &mut Vec<R::Elem>,
    one: &R::Elem,
    target: usize,
    out: &mut Vec<Vec<usize>>,
) {
    let depth = chosen.len();
    if depth == h {
        if prefix[depth] == *one {
            out.push(chosen.clone());
        }
        return;
    }
    let remaining = h - depth;
    for i in start..=residues.len() - remaining {
        if out.len() >= target {
            return;
        }
        let next = ring.mul(&prefix[depth], &residues[i]);
        chosen.push(i);
        prefix.push(next);
        walk(ring, residues, h, i + 1, chosen, prefix, one, target, out);
        prefix.pop();
        chosen.pop();
    }
}

/// All `k`-combinations of `0..n` with their residue products, in lexicographic order.
fn combination_products<R: ResidueRing>(ring: &R, residues: &[R::Elem], k: usize) -> Vec<(Vec<usize>, R::Elem)> {
    let n = residues.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let product = idx
            .iter()
            .fold(ring.one(), |acc, &i| ring.mul(&acc, &residues[i]));
        out.push((idx.clone(), product));
        // Advance to the next combination.
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn meet_in_the_middle<R: ResidueRing>(
    ring: &R,
    residues: &[R::Elem],
    h: usize,
    target: usize,
) -> Vec<Vec<usize>> {
    let n = residues.len();
    let mut out = Vec::new();
    if h == 0 || h > n || target == 0 {
        return out;
    }
    let split = n / 2;
    let (left, right) = residues.split_at(split);
    let lo = h.saturating_sub(right.len());
    let hi = h.min(left.len());
    for h_left in lo..=hi {
        let h_right = h - h_left;
        let mut index: HashMap<R::Elem, Vec<Vec<usize>>> = HashMap::new();
        for (set, product) in combination_products(ring, right, h_right) {
            index.entry(product).or_default().push(set);
        }
        for (set, product) in combination_products(ring, left, h_left) {
            let Some(need) = ring.inv(&product) else { continue };
            if let Some(matches) = index.get(&need) {
                for m in matches {
                    let mut full = set.clone();
                    full.extend(m.iter().map(|&j| j + split));
                    out.push(full);
                    if out.len() >= target {
                        return out;
                    }
                }
            }
        }
    }
    out
}

fn sampled<R: ResidueRing>(
    ring: &R,
    residues: &[R::Elem],
    h: usize,
    target: usize,
    config: &SearchConfig,
) -> Vec<Vec<usize>> {
    let n = residues.len();
    // Largest sub-pool whose half-index fits.
    let mut size = h;
    while size < n && half_index_size(size + 1, h) <= config.index_limit {
        size += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..config.max_rounds {
        if found.len() >= target {
            break;
        }
        order.shuffle(&mut rng);
        let mut pick: Vec<usize> = order[..size].to_vec();
        pick.sort_unstable();
        let sub: Vec<R::Elem> = pick.iter().map(|&i| residues[i].clone()).collect();
        let local = if binomial(size as u64, h as u64) <= config.exhaustive_limit {
            exhaustive(ring, &sub, h, usize::MAX)
        } else {
            meet_in_the_middle(ring, &sub, h, usize::MAX)
        };
        for set in local {
            let mapped: Vec<usize> = set.iter().map(|&i| pick[i]).collect();
            found.insert(mapped);
            if found.len() >= target {
                break;
            }
        }
    }
    found.into_iter().take(target).collect()
}

/// Residues of the pool modulo `m`, or `None` where a prime is not a unit.
pub fn word_residues(pool: &[BigUint], m: u64) -> Vec<Option<u64>> {
    pool.iter()
        .map(|p| {
            let r = (p % m).to_u64().expect("reduced below a word");
            (num_integer::Integer::gcd(&r, &m) == 1).then_some(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residues_120() -> Vec<u64> {
        vec![7, 11, 13, 31, 41, 61]
    }

    #[test]
    fn combinations_are_complete_and_ordered() {
        let ring = WordRing(1000);
        let vals: Vec<u64> = (1..=6).collect();
        for k in 0..=6 {
            let combos = combination_products(&ring, &vals, k);
            assert_eq!(combos.len() as u128, binomial(6, k as u64), "k={k}");
            assert!(combos.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn exhaustive_finds_41041() {
        let ring = WordRing(120);
        let sets = exhaustive(&ring, &residues_120(), 4, usize::MAX);
        assert!(sets.contains(&vec![0, 1, 2, 4]));
        for s in &sets {
            let product: u64 = s.iter().map(|&i| residues_120()[i]).product();
            assert_eq!(product % 120, 1);
        }
    }

    #[test]
    fn mitm_agrees_with_exhaustive() {
        let ring = WordRing(120);
        let vals = residues_120();
        for h in 1..=6 {
            let a = exhaustive(&ring, &vals, h, usize::MAX);
            let mut b = meet_in_the_middle(&ring, &vals, h, usize::MAX);
            b.sort();
            assert_eq!(a, b, "h={h}");
        }
    }

    #[test]
    fn big_ring_agrees_with_word_ring() {
        let vals = residues_120();
        let word = exhaustive(&WordRing(120), &vals, 3, usize::MAX);
        let big_vals: Vec<BigUint> = vals.iter().map(|&v| BigUint::from(v)).collect();
        let big = exhaustive(&BigRing(BigUint::from(120u32)), &big_vals, 3, usize::MAX);
        assert_eq!(word, big);
    }

    #[test]
    fn target_caps_output() {
        let ring = WordRing(7);
        let vals: Vec<u64> = (0..14).map(|i| 1 + (i % 6)).collect();
        assert_eq!(exhaustive(&ring, &vals, 3, 5).len(), 5);
        assert_eq!(meet_in_the_middle(&ring, &vals, 3, 5).len(), 5);
    }

    #[test]
    fn method_selection() {
        let config = SearchConfig {
            exhaustive_limit: 100,
            index_limit: 1000,
            ..Default::default()
        };
        assert_eq!(choose_method(6, 3, &config), SearchMethod::Exhaustive);
        assert_eq!(choose_method(20, 6, &config), SearchMethod::MeetInTheMiddle);
        assert_eq!(choose_method(60, 10, &config), SearchMethod::SampledMeetInTheMiddle);
    }

    #[test]
    fn sampled_sets_are_valid_and_distinct() {
        let m = 1009u64;
        let ring = WordRing(m);
        let vals: Vec<u64> = (0..40u64).map(|i| 2 + (i * 37) % (m - 2)).collect();
        let config = SearchConfig {
            exhaustive_limit: 10,
            index_limit: 300,
            max_rounds: 20,
            seed: 3,
        };
        let sets = sampled(&ring, &vals, 4, 10, &config);
        let unique: BTreeSet<_> = sets.iter().cloned().collect();
        assert_eq!(unique.len(), sets.len());
        for s in &sets {
            assert_eq!(s.len(), 4);
            let p = s.iter().fold(1u64, |acc, &i| acc * vals[i] % m);
            assert_eq!(p, 1);
        }
    }
}
