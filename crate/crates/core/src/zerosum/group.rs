//! Finite abelian groups given as products of cyclic groups, Davenport
//! constants, and subsequence counting.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ZeroSumError;
use crate::arith::{self, modular::ceil_ln, Natural};

/// Default largest group order accepted by the brute-force Davenport search.
pub const DEFAULT_BRUTE_FORCE_LIMIT: u64 = 64;
/// Default largest sequence length accepted by the subsequence counter.
pub const DEFAULT_AGP_MAX_R: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    /// `Z_{a} x Z_{b} x ...`; the empty list and all-ones lists are trivial.
    Cyclic { orders: Vec<u64> },
    /// The unit group modulo `modulus`.
    Residue { modulus: Natural },
}

impl GroupSpec {
    pub fn cyclic(orders: &[u64]) -> Self {
        GroupSpec::Cyclic {
            orders: orders.to_vec(),
        }
    }

    /// Cyclic factors of the group. Unit groups are decomposed by the
    /// structure theorem for `(Z/p^a)^*`.
    pub fn cyclic_orders(&self) -> Result<Vec<u64>, ZeroSumError> {
        match self {
            GroupSpec::Cyclic { orders } => {
                if orders.contains(&0) {
                    return Err(ZeroSumError::Invalid("cyclic orders must be >= 1".into()));
                }
                Ok(orders.clone())
            }
            GroupSpec::Residue { modulus } => {
                if modulus.is_one() {
                    return Ok(vec![]);
                }
                let f = arith::factorize(modulus)
                    .map_err(|e| ZeroSumError::Invalid(format!("cannot factor modulus: {e}")))?;
                let mut orders = Vec::new();
                for (p, e) in f.factors() {
                    let p = p
                        .to_u64()
                        .ok_or_else(|| ZeroSumError::Invalid("modulus prime exceeds 64 bits".into()))?;
                    let too_big = || ZeroSumError::Invalid("unit group factor exceeds 64 bits".into());
                    if p == 2 {
                        match e {
                            1 => {}
                            2 => orders.push(2),
                            _ => {
                                orders.push(2);
                                orders.push(1u64.checked_shl(e - 2).ok_or_else(too_big)?);
                            }
                        }
                    } else {
                        let pp = p.checked_pow(e - 1).ok_or_else(too_big)?;
                        orders.push(pp.checked_mul(p - 1).ok_or_else(too_big)?);
                    }
                }
                Ok(orders)
            }
        }
    }

    pub fn order(&self) -> Result<Natural, ZeroSumError> {
        match self {
            GroupSpec::Residue { modulus } if !modulus.is_one() => {
                let f = arith::factorize(modulus)
                    .map_err(|e| ZeroSumError::Invalid(format!("cannot factor modulus: {e}")))?;
                Ok(arith::euler_phi(&f))
            }
            _ => Ok(self
                .cyclic_orders()?
                .iter()
                .fold(BigUint::one(), |acc, &o| acc * o)
                .into()),
        }
    }

    /// Exponent of the group, `lambda(G)`.
    pub fn exponent(&self) -> Result<Natural, ZeroSumError> {
        match self {
            GroupSpec::Residue { modulus } if !modulus.is_one() => {
                let f = arith::factorize(modulus)
                    .map_err(|e| ZeroSumError::Invalid(format!("cannot factor modulus: {e}")))?;
                Ok(arith::carmichael_lambda(&f))
            }
            _ => Ok(self
                .cyclic_orders()?
                .iter()
                .fold(BigUint::one(), |acc, &o| acc.lcm(&BigUint::from(o)))
                .into()),
        }
    }
}

/// A small group with elements encoded as mixed-radix indices; 0 is the identity.
#[derive(Clone, Debug)]
pub struct SmallGroup {
    orders: Vec<u64>,
    size: usize,
}

impl SmallGroup {
    pub fn new(orders: &[u64], limit: u64) -> Result<Self, ZeroSumError> {
        let orders: Vec<u64> = orders.iter().copied().filter(|&o| o > 1).collect();
        let mut size: u64 = 1;
        for &o in &orders {
            size = size.checked_mul(o).filter(|&s| s <= limit).ok_or(ZeroSumError::TooLarge {
                limit,
                hint: "use davenport_bound for larger groups",
            })?;
        }
        Ok(SmallGroup {
            orders,
            size: size as usize,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a as u64, b as u64);
        let mut out = 0u64;
        let mut radix = 1u64;
        for &o in &self.orders {
            let digit = (a % o + b % o) % o;
            out += digit * radix;
            radix *= o;
            a /= o;
            b /= o;
        }
        out as usize
    }

    fn addition_table(&self) -> Vec<usize> {
        let n = self.size;
        let mut table = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = self.add(a, b);
            }
        }
        table
    }
}

/// Smallest `n` such that every length-`n` sequence over the group has a
/// nonempty subsequence summing to the identity.
///
/// Equal to one more than the longest zero-sum-free sequence, which is found
/// by depth-first search over multisets while tracking the set of reachable
/// subsequence sums.
pub fn davenport_bruteforce(g: &GroupSpec, limit: u64) -> Result<u64, ZeroSumError> {
    let group = SmallGroup::new(&g.cyclic_orders()?, limit)?;
    let n = group.size();
    if n == 1 {
        return Ok(1);
    }
    let table = group.addition_table();
    let mut search = ZeroSumFreeSearch {
        n,
        table: &table,
        best: 0,
    };
    let sums = vec![false; n];
    search.extend(1, &sums, 0);
    Ok(search.best as u64 + 1)
}

struct ZeroSumFreeSearch<'a> {
    n: usize,
    table: &'a [usize],
    best: usize,
}

impl ZeroSumFreeSearch<'_> {
    /// `sums[s]` marks nonempty subsequence sums of the current sequence.
    fn extend(&mut self, min_elem: usize, sums: &[bool], len: usize) -> bool {
        if len > self.best {
            self.best = len;
        }
        // A zero-sum-free sequence of length l has at least l distinct sums,
        // all nonzero, so l <= n - 1.
        if self.best == self.n - 1 {
            return true;
        }
        for g in min_elem..self.n {
            let mut next = sums.to_vec();
            next[g] = true;
            for s in 0..self.n {
                if sums[s] {
                    next[self.table[s * self.n + g]] = true;
                }
            }
            if next[0] {
                continue;
            }
            if self.extend(g, &next, len + 1) {
                return true;
            }
        }
        false
    }
}

/// `ceil(lambda * (1 + ln|G| / lambda)) = lambda + ceil(ln |G|)`.
pub fn davenport_bound(lambda: &Natural, order: &Natural) -> Result<Natural, ZeroSumError> {
    if lambda.is_zero() || order.is_zero() {
        return Err(ZeroSumError::Invalid("lambda and |G| must be >= 1".into()));
    }
    Ok((lambda.as_biguint() + ceil_ln(order.as_biguint())).into())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DavenportReport {
    pub group: GroupSpec,
    pub exact: Option<u64>,
    pub ek_meshulam_bound: Natural,
}

pub fn davenport_report(g: &GroupSpec, limit: u64) -> Result<DavenportReport, ZeroSumError> {
    let exact = match davenport_bruteforce(g, limit) {
        Ok(v) => Some(v),
        Err(ZeroSumError::TooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let bound = davenport_bound(&g.exponent()?, &g.order()?)?;
    Ok(DavenportReport {
        group: g.clone(),
        exact,
        ek_meshulam_bound: bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgpReport {
    pub group: GroupSpec,
    pub davenport: u64,
    pub r: usize,
    pub t: usize,
    pub trials: usize,
    pub min_count: u64,
    pub max_count: u64,
    /// `C(r, t) / C(r, n)` as a reduced fraction.
    pub bound_num: u128,
    pub bound_den: u128,
    pub bound: f64,
    pub violations: usize,
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of index subsets with size in `[t - n, t]` whose elements sum to the identity.
pub fn count_identity_subsequences(group: &SmallGroup, seq: &[usize], t: usize, n: usize) -> u64 {
    let r = seq.len();
    let lo = t.saturating_sub(n);
    let mut sums = vec![0usize; 1 << r];
    let mut count = 0u64;
    for mask in 1usize..(1 << r) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        sums[mask] = group.add(sums[rest], seq[low]);
        let size = mask.count_ones() as usize;
        if sums[mask] == 0 && size >= lo && size <= t {
            count += 1;
        }
    }
    count
}

/// Counts identity-product subsequences of random sequences against `C(r,t)/C(r,n)`.
pub fn agp_count_check(
    g: &GroupSpec,
    r: usize,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<AgpReport, ZeroSumError> {
    let orders = g.cyclic_orders()?;
    let n = davenport_bruteforce(g, DEFAULT_BRUTE_FORCE_LIMIT)? as usize;
    if !(r > t && t > n) {
        return Err(ZeroSumError::Invalid(format!(
            "need r > t > n(G); got r = {r}, t = {t}, n(G) = {n}"
        )));
    }
    if r > DEFAULT_AGP_MAX_R {
        return Err(ZeroSumError::Invalid(format!(
            "r = {r} exceeds the exhaustive-counting limit {DEFAULT_AGP_MAX_R}"
        )));
    }
    let group = SmallGroup::new(&orders, u64::MAX)?;
    let num = binomial(r as u64, t as u64);
    let den = binomial(r as u64, n as u64);
    let g_common = num.gcd(&den);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_count = u64::MAX;
    let mut max_count = 0;
    let mut violations = 0;
    for _ in 0..trials {
        let seq: Vec<usize> = (0..r).map(|_| rng.gen_range(0..group.size())).collect();
        let count = count_identity_subsequences(&group, &seq, t, n);
        min_count = min_count.min(count);
        max_count = max_count.max(count);
        if (count as u128) * den < num {
            violations += 1;
        }
    }
    Ok(AgpReport {
        group: g.clone(),
        davenport: n as u64,
        r,
        t,
        trials,
        min_count: if trials == 0 { 0 } else { min_count },
        max_count,
        bound_num: num / g_common,
        bound_den: den / g_common,
        bound: num as f64 / den as f64,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent definition check: enumerate every multiset of length `len`
    /// and test it for a zero-sum subsequence with a plain reachability scan.
    fn every_sequence_has_zero_sum(group: &SmallGroup, len: usize) -> bool {
        fn rec(group: &SmallGroup, start: usize, left: usize, seq: &mut Vec<usize>) -> bool {
            if left == 0 {
                let mut reach = vec![false; group.size()];
                for &x in seq.iter() {
                    let mut next = reach.clone();
                    next[x] = true;
                    for (s, &hit) in reach.iter().enumerate() {
                        if hit {
                            next[group.add(s, x)] = true;
                        }
                    }
                    reach = next;
                }
                return reach[0];
            }
            for g in start..group.size() {
                seq.push(g);
                let ok = rec(group, g, left - 1, seq);
                seq.pop();
                if !ok {
                    return false;
                }
            }
            true
        }
        rec(group, 0, len, &mut Vec::new())
    }

    fn oracle_davenport(orders: &[u64]) -> u64 {
        let group = SmallGroup::new(orders, 1 << 20).unwrap();
        (1..).find(|&len| every_sequence_has_zero_sum(&group, len)).unwrap() as u64
    }

    #[test]
    fn named_examples() {
        assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[5]), 64).unwrap(), 5);
        assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[]), 64).unwrap(), 1);
        assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[1]), 64).unwrap(), 1);
        assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[2, 2]), 64).unwrap(), 3);
    }

    #[test]
    fn cyclic_matches_independent_enumerator() {
        for m in 1..=9u64 {
            assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[m]), 64).unwrap(), oracle_davenport(&[m]));
        }
        for orders in [[2u64, 2], [2, 4], [3, 3], [2, 6]] {
            assert_eq!(
                davenport_bruteforce(&GroupSpec::cyclic(&orders), 64).unwrap(),
                oracle_davenport(&orders),
                "{orders:?}"
            );
        }
    }

    #[test]
    fn noncyclic_known_values() {
        // D(Z_2^r) = r + 1 and D(Z_m + Z_m) = 2m - 1.
        assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[2, 2, 2]), 64).unwrap(), 4);
        assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[2, 2, 2, 2, 2]), 64).unwrap(), 6);
        assert_eq!(davenport_bruteforce(&GroupSpec::cyclic(&[4, 4]), 64).unwrap(), 7);
    }

    #[test]
    fn refuses_large_groups() {
        assert!(matches!(
            davenport_bruteforce(&GroupSpec::cyclic(&[65]), 64),
            Err(ZeroSumError::TooLarge { .. })
        ));
    }

    #[test]
    fn bound_values() {
        let one = Natural::from(1u64);
        assert_eq!(davenport_bound(&one, &one).unwrap(), one);
        assert_eq!(davenport_bound(&4u64.into(), &8u64.into()).unwrap(), 7u64.into());
        // 5040 + ceil(ln 290377) = 5040 + 13
        assert_eq!(davenport_bound(&5040u64.into(), &290_377u64.into()).unwrap(), 5053u64.into());
    }

    #[test]
    fn residue_groups_decompose() {
        let g = GroupSpec::Residue { modulus: 120u64.into() };
        // (Z/8)^* x (Z/3)^* x (Z/5)^* = Z2 x Z2 x Z2 x Z4
        let mut orders = g.cyclic_orders().unwrap();
        orders.sort();
        assert_eq!(orders, vec![2, 2, 2, 4]);
        assert_eq!(g.order().unwrap(), 32u64.into());
        assert_eq!(g.exponent().unwrap(), 4u64.into());
        // Davenport of Z2^3 x Z4 is 1 + 1 + 1 + 3 + 1 = 7 (p-group formula).
        assert_eq!(davenport_bruteforce(&g, 64).unwrap(), 7);
    }

    #[test]
    fn bruteforce_below_bound() {
        for orders in [vec![2u64], vec![3], vec![12], vec![2, 2], vec![2, 4], vec![3, 3], vec![2, 2, 2]] {
            let g = GroupSpec::cyclic(&orders);
            let exact = davenport_bruteforce(&g, 64).unwrap();
            let bound = davenport_bound(&g.exponent().unwrap(), &g.order().unwrap()).unwrap();
            assert!(Natural::from(exact) <= bound, "{orders:?}");
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 4), 126);
        assert_eq!(binomial(9, 3), 84);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn identity_sequence_hits_every_subsequence() {
        let group = SmallGroup::new(&[3], 64).unwrap();
        let seq = vec![0; 9];
        let count = count_identity_subsequences(&group, &seq, 4, 3);
        let expected: u128 = (1..=4).map(|k| binomial(9, k)).sum();
        assert_eq!(count as u128, expected);
    }

    #[test]
    fn agp_z3_bound_is_three_halves() {
        let report = agp_count_check(&GroupSpec::cyclic(&[3]), 9, 4, 20, 7).unwrap();
        assert_eq!((report.bound_num, report.bound_den), (3, 2));
        assert_eq!(report.violations, 0);
        assert!(report.min_count >= 2);
    }

    #[test]
    fn agp_rejects_bad_parameters() {
        assert!(agp_count_check(&GroupSpec::cyclic(&[5]), 6, 5, 1, 0).is_err());
        assert!(agp_count_check(&GroupSpec::cyclic(&[3]), 20, 4, 1, 0).is_err());
    }
}
