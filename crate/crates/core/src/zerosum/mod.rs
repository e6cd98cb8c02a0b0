//! Zero-sum combinatorics: Davenport constants, the subsequence-counting
//! theorem, and the families `C_h` of `h`-subsets of the harvested pool whose
//! product is `1 (mod M)`.

mod group;
pub mod search;

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use group::{
    agp_count_check, binomial, count_identity_subsequences, davenport_bound, davenport_bruteforce,
    davenport_report, AgpReport, DavenportReport, GroupSpec, SmallGroup, DEFAULT_AGP_MAX_R,
    DEFAULT_BRUTE_FORCE_LIMIT,
};
pub use search::{SearchConfig, SearchMethod};

use crate::arith::{modular::product_mod, Natural};
use crate::harvest::HarvestedPrimes;
use search::{BigRing, ResidueRing, WordRing};

#[derive(Debug, Error)]
pub enum ZeroSumError {
    #[error("group order exceeds the brute-force limit {limit}; {hint}")]
    TooLarge { limit: u64, hint: &'static str },
    #[error("invalid zero-sum request: {0}")]
    Invalid(String),
    #[error("no zero-sum family in the searched range")]
    NoFamilies,
}

/// Subsets of size `h` of a prime pool whose products are `1 (mod modulus)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroSumFamily {
    pub modulus: Natural,
    pub h: usize,
    /// Each set ascending; sets distinct and in lexicographic order unless
    /// `disjoint`, in which case they appear in extraction order.
    pub sets: Vec<Vec<Natural>>,
    pub disjoint: bool,
    pub method: SearchMethod,
}

impl ZeroSumFamily {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Re-multiplies every set modulo the family modulus.
    pub fn verify(&self) -> bool {
        let m = self.modulus.as_biguint();
        self.sets.iter().all(|set| {
            set.len() == self.h && product_mod(set.iter().map(|p| p.as_biguint()), m) == BigUint::from(1u32) % m
        })
    }
}

pub type Families = BTreeMap<usize, ZeroSumFamily>;

#[derive(Clone, Debug)]
pub struct ZeroSumRequest {
    pub h_min: usize,
    pub h_max: usize,
    pub target_count: usize,
    pub disjoint: bool,
    pub search: SearchConfig,
}

/// Searches every `h` in `[h_min, h_max]` for up to `target_count` sets.
///
/// Primes sharing a factor with `m` cannot take part and are dropped first.
/// With `disjoint`, sets are extracted greedily: each new set is the first
/// one found among primes not used by earlier sets.
pub fn find_zero_sum_sets(
    pool: &HarvestedPrimes,
    m: &Natural,
    request: &ZeroSumRequest,
) -> Result<Families, ZeroSumError> {
    if pool.is_empty() {
        return Err(ZeroSumError::Invalid("pool is empty".into()));
    }
    if request.h_min == 0 || request.h_min > request.h_max {
        return Err(ZeroSumError::Invalid(format!(
            "invalid h range [{}, {}]",
            request.h_min, request.h_max
        )));
    }
    if request.h_max > pool.len() {
        return Err(ZeroSumError::Invalid(format!(
            "h_max = {} exceeds pool size {}",
            request.h_max,
            pool.len()
        )));
    }
    if m.as_biguint() < &BigUint::from(2u32) {
        return Err(ZeroSumError::Invalid("modulus must be >= 2".into()));
    }
    let primes: Vec<Natural> = pool.primes();
    match m.to_u64() {
        Some(word) => {
            let ring = WordRing(word);
            let units: Vec<(Natural, u64)> = primes
                .iter()
                .filter_map(|p| {
                    let r = (p.as_biguint() % word).to_u64()?;
                    (num_integer::Integer::gcd(&r, &word) == 1).then(|| (p.clone(), r))
                })
                .collect();
            Ok(run(&ring, &units, m, request))
        }
        None => {
            let ring = BigRing(m.as_biguint().clone());
            let units: Vec<(Natural, BigUint)> = primes
                .iter()
                .filter_map(|p| {
                    let r = p.as_biguint() % m.as_biguint();
                    ring.inv(&r).map(|_| (p.clone(), r))
                })
                .collect();
            Ok(run(&ring, &units, m, request))
        }
    }
}

fn run<R: ResidueRing>(ring: &R, units: &[(Natural, R::Elem)], m: &Natural, request: &ZeroSumRequest) -> Families {
    let mut families = Families::new();
    for h in request.h_min..=request.h_max {
        let (sets, method) = if request.disjoint {
            greedy_disjoint(ring, units, h, request.target_count, &request.search)
        } else {
            let residues: Vec<R::Elem> = units.iter().map(|(_, r)| r.clone()).collect();
            let (sets, method) = search::search(ring, &residues, h, request.target_count, &request.search);
            (to_primes(units, &sets), method)
        };
        families.insert(
            h,
            ZeroSumFamily {
                modulus: m.clone(),
                h,
                sets,
                disjoint: request.disjoint,
                method,
            },
        );
    }
    families
}

fn to_primes<E>(units: &[(Natural, E)], sets: &[Vec<usize>]) -> Vec<Vec<Natural>> {
    sets.iter()
        .map(|s| s.iter().map(|&i| units[i].0.clone()).collect())
        .collect()
}

fn greedy_disjoint<R: ResidueRing>(
    ring: &R,
    units: &[(Natural, R::Elem)],
    h: usize,
    target: usize,
    config: &SearchConfig,
) -> (Vec<Vec<Natural>>, SearchMethod) {
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut out = Vec::new();
    let mut method = search::choose_method(units.len(), h, config);
    while out.len() < target {
        let free: Vec<usize> = (0..units.len()).filter(|i| !used.contains(i)).collect();
        if free.len() < h {
            break;
        }
        let residues: Vec<R::Elem> = free.iter().map(|&i| units[i].1.clone()).collect();
        let (sets, m) = search::search(ring, &residues, h, 1, config);
        if out.is_empty() {
            method = m;
        }
        let Some(first) = sets.into_iter().next() else { break };
        let chosen: Vec<usize> = first.iter().map(|&j| free[j]).collect();
        used.extend(chosen.iter().copied());
        out.push(chosen.iter().map(|&i| units[i].0.clone()).collect());
    }
    (out, method)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HSelection {
    pub h: usize,
    pub window: (usize, usize),
    /// Set when no nonempty family fell inside `[n, 2n]` and the full range was used.
    pub fell_back: bool,
}

/// The `h` maximizing `|C_h|` within `[n_bound, 2 n_bound]` (smallest on ties),
/// falling back to every searched `h` when that window holds no sets.
pub fn select_h(families: &Families, n_bound: usize) -> Result<HSelection, ZeroSumError> {
    let window = (n_bound, n_bound.saturating_mul(2));
    let best = |in_window: bool| {
        families
            .iter()
            .filter(|(h, f)| !f.is_empty() && (!in_window || (window.0..=window.1).contains(*h)))
            .fold(None::<(usize, usize)>, |acc, (&h, f)| match acc {
                Some((_, c)) if c >= f.len() => acc,
                _ => Some((h, f.len())),
            })
    };
    if let Some((h, _)) = best(true) {
        return Ok(HSelection {
            h,
            window,
            fell_back: false,
        });
    }
    let (h, _) = best(false).ok_or(ZeroSumError::NoFamilies)?;
    warn!(
        "no zero-sum family with h in [{}, {}]; using h = {h} from the full searched range",
        window.0, window.1
    );
    Ok(HSelection {
        h,
        window,
        fell_back: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Natural;

    fn pool_120() -> HarvestedPrimes {
        let primes: Vec<Natural> = [7u64, 11, 13, 31, 41, 61].map(Natural::from).to_vec();
        HarvestedPrimes::from_primes(&120u64.into(), 1, &primes)
    }

    fn request(h_min: usize, h_max: usize, disjoint: bool) -> ZeroSumRequest {
        ZeroSumRequest {
            h_min,
            h_max,
            target_count: usize::MAX,
            disjoint,
            search: SearchConfig::default(),
        }
    }

    fn as_u64(set: &[Natural]) -> Vec<u64> {
        set.iter().map(|p| p.to_u64().unwrap()).collect()
    }

    #[test]
    fn family_for_120_contains_41041() {
        let families = find_zero_sum_sets(&pool_120(), &120u64.into(), &request(4, 4, false)).unwrap();
        let c4 = &families[&4];
        assert!(c4.sets.iter().any(|s| as_u64(s) == vec![7, 11, 13, 41]));
        assert!(c4.verify());
        // Oracle: all C(6,4) = 15 subsets.
        let pool = [7u64, 11, 13, 31, 41, 61];
        let mut expected = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                for c in b + 1..6 {
                    for d in c + 1..6 {
                        if pool[a] * pool[b] * pool[c] * pool[d] % 120 == 1 {
                            expected.push(vec![pool[a], pool[b], pool[c], pool[d]]);
                        }
                    }
                }
            }
        }
        let got: Vec<Vec<u64>> = c4.sets.iter().map(|s| as_u64(s)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn singletons_are_primes_one_mod_m() {
        let families = find_zero_sum_sets(&pool_120(), &120u64.into(), &request(1, 1, false)).unwrap();
        assert!(families[&1].is_empty());
        let families = find_zero_sum_sets(&pool_120(), &30u64.into(), &request(1, 1, false)).unwrap();
        let got: Vec<Vec<u64>> = families[&1].sets.iter().map(|s| as_u64(s)).collect();
        assert_eq!(got, vec![vec![31], vec![61]]);
    }

    #[test]
    fn disjoint_sets_do_not_overlap() {
        let families = find_zero_sum_sets(&pool_120(), &120u64.into(), &request(2, 3, true)).unwrap();
        for family in families.values() {
            assert!(family.verify());
            let mut seen = BTreeSet::new();
            for set in &family.sets {
                for p in set {
                    assert!(seen.insert(p.clone()), "{p} reused");
                }
            }
        }
    }

    #[test]
    fn big_modulus_path() {
        // M above 2^64 with a hand-built pool of units.
        let m: Natural = "36893488147419103232".parse().unwrap(); // 2^65
        let primes: Vec<Natural> = [3u64, 5, 7, 11, 13].map(Natural::from).to_vec();
        let pool = HarvestedPrimes::from_primes(&m, 1, &primes);
        let families = find_zero_sum_sets(&pool, &m, &request(1, 5, false)).unwrap();
        assert!(families.values().all(|f| f.is_empty()));
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(find_zero_sum_sets(&pool_120(), &120u64.into(), &request(3, 7, false)).is_err());
        assert!(find_zero_sum_sets(&pool_120(), &120u64.into(), &request(0, 2, false)).is_err());
    }

    fn family(h: usize, count: usize) -> ZeroSumFamily {
        ZeroSumFamily {
            modulus: 2u64.into(),
            h,
            sets: vec![vec![]; count],
            disjoint: false,
            method: SearchMethod::Exhaustive,
        }
    }

    #[test]
    fn select_h_argmax_and_fallback() {
        let mut families = Families::new();
        families.insert(3, family(3, 5));
        families.insert(4, family(4, 9));
        assert_eq!(select_h(&families, 3).unwrap().h, 4);

        families.insert(5, family(5, 9));
        assert_eq!(select_h(&families, 3).unwrap().h, 4);

        let sel = select_h(&families, 10).unwrap();
        assert!(sel.fell_back);
        assert_eq!(sel.h, 4);

        let mut single = Families::new();
        single.insert(7, family(7, 1));
        assert_eq!(select_h(&single, 1).unwrap().h, 7);

        let mut empty = Families::new();
        empty.insert(2, family(2, 0));
        assert!(matches!(select_h(&empty, 1), Err(ZeroSumError::NoFamilies)));
    }
}
