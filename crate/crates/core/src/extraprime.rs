//! The extra prime `P = L k0 k1 + 1` and an empirical gauge of least primes
//! in arithmetic progressions.

use num_bigint::BigUint;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, Natural};
use crate::lbuilder::Modulus;

#[derive(Debug, Error)]
pub enum ExtraPrimeError {
    #[error("no prime of the form {base} * k1 + 1 for k1 in [1, {k1_max}]")]
    NotFound { base: Natural, k1_max: u64 },
    #[error("invalid extra-prime request: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraPrime {
    pub k1: u64,
    #[serde(rename = "P")]
    pub p: Natural,
    /// `L * k0`.
    pub modulus_base: Natural,
    /// `(P - 1) / (base * ln^2 base)`; absent when `base < 3`.
    pub hb_ratio: Option<f64>,
}

impl ExtraPrime {
    /// The working modulus `M = L k0 k1 = P - 1`.
    pub fn working_modulus(&self) -> Natural {
        (self.modulus_base.as_biguint() * self.k1).into()
    }
}

/// `max(10^6, ceil(100 ln^2 base))`.
pub fn default_k1_max(base: &Natural) -> u64 {
    let ln = base.ln();
    let scaled = (100.0 * ln * ln).ceil();
    if scaled.is_finite() && scaled < u64::MAX as f64 {
        (scaled as u64).max(1_000_000)
    } else {
        u64::MAX
    }
}

pub fn find_k1(l: &Modulus, k0: u64, k1_max: u64) -> Result<ExtraPrime, ExtraPrimeError> {
    let base: Natural = (l.value.as_biguint() * k0).into();
    find_k1_for_base(&base, k1_max)
}

/// Smallest `k1 <= k1_max` with `base * k1 + 1` prime.
pub fn find_k1_for_base(base: &Natural, k1_max: u64) -> Result<ExtraPrime, ExtraPrimeError> {
    if base.as_biguint() < &BigUint::from(2u32) {
        return Err(ExtraPrimeError::Invalid(format!("base {base} must be >= 2")));
    }
    if k1_max == 0 {
        return Err(ExtraPrimeError::Invalid("k1_max must be >= 1".into()));
    }
    let step = base.as_biguint();
    // base odd => base*k1 + 1 even for odd k1; only even k1 can work (base >= 3).
    let only_even = step.is_odd() && step > &BigUint::from(2u32);
    let mut candidate: BigUint = step + 1u32;
    for k1 in 1..=k1_max {
        if !(only_even && k1 % 2 == 1) {
            let p = Natural::from(candidate.clone());
            if arith::is_prime(&p) {
                let ln = base.ln();
                let hb_ratio = (step >= &BigUint::from(3u32)).then(|| k1 as f64 / (ln * ln));
                return Ok(ExtraPrime {
                    k1,
                    p,
                    modulus_base: base.clone(),
                    hb_ratio,
                });
            }
        }
        candidate += step;
    }
    Err(ExtraPrimeError::NotFound {
        base: base.clone(),
        k1_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeRow {
    pub d: u64,
    pub least_prime: u64,
    /// `p / (d ln^2 d)`, for `d >= 3`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub residue: u64,
    pub d_max: u64,
    pub max_ratio: f64,
    pub argmax_d: u64,
    pub table: Vec<GaugeRow>,
}

/// Least prime `= residue (mod d)` for every `d <= d_max` coprime to the residue.
pub fn heathbrown_gauge(d_max: u64, residue: u64) -> GaugeReport {
    let table: Vec<GaugeRow> = (1..=d_max)
        .into_par_iter()
        .filter(|&d| residue.gcd(&d) == 1)
        .map(|d| {
            let least_prime = least_prime_in_progression(residue % d, d);
            let ratio = (d >= 3).then(|| {
                let ln = (d as f64).ln();
                least_prime as f64 / (d as f64 * ln * ln)
            });
            GaugeRow { d, least_prime, ratio }
        })
        .collect();
    let (argmax_d, max_ratio) = table
        .iter()
        .filter_map(|row| row.ratio.map(|r| (row.d, r)))
        .fold((0, 0.0), |acc, (d, r)| if r > acc.1 { (d, r) } else { acc });
    GaugeReport {
        residue,
        d_max,
        max_ratio,
        argmax_d,
        table,
    }
}

/// Least prime `p = c (mod d)`; `c` is already reduced.
pub fn least_prime_in_progression(c: u64, d: u64) -> u64 {
    if d == 1 {
        return 2;
    }
    let mut p = if c == 0 { d } else { c };
    while !arith::is_prime_u64(p) {
        p += d;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_35() {
        let e = find_k1_for_base(&35u64.into(), 100).unwrap();
        assert_eq!((e.k1, e.p.clone()), (2, 71u64.into()));
        assert_eq!(e.working_modulus(), 70u64.into());
        let ratio = e.hb_ratio.unwrap();
        assert!((ratio - 2.0 / 35f64.ln().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn base_2() {
        let e = find_k1_for_base(&2u64.into(), 10).unwrap();
        assert_eq!((e.k1, e.p), (1, 3u64.into()));
        assert!(e.hb_ratio.is_none());
    }

    #[test]
    fn base_290377_by_linear_scan() {
        let base = 290_377u64;
        let expected = (1u64..).find(|k| arith::is_prime_u64(base * k + 1)).unwrap();
        let e = find_k1_for_base(&base.into(), 1000).unwrap();
        assert_eq!(e.k1, expected);
        for k in 1..e.k1 {
            assert!(!arith::is_prime_u64(base * k + 1));
        }
    }

    #[test]
    fn not_found_names_range() {
        // 2 * 3 * 5 * 7 * 11 * 13 = 30030; 30030 + 1 = 59 * 509.
        match find_k1_for_base(&30030u64.into(), 1) {
            Err(ExtraPrimeError::NotFound { k1_max, .. }) => assert_eq!(k1_max, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(find_k1_for_base(&1u64.into(), 10).is_err());
    }

    #[test]
    fn default_bound() {
        assert_eq!(default_k1_max(&35u64.into()), 1_000_000);
        let big: Natural = (BigUint::from(1u32) << 100u32).into();
        assert_eq!(default_k1_max(&big), 1_000_000);
        let huge: Natural = (BigUint::from(1u32) << 1000u32).into();
        let ln = 1000.0 * std::f64::consts::LN_2;
        assert_eq!(default_k1_max(&huge), (100.0 * ln * ln).ceil() as u64);
    }

    #[test]
    fn gauge_small() {
        let report = heathbrown_gauge(50, 1);
        assert_eq!(report.table[1].d, 2);
        assert_eq!(report.table[1].least_prime, 3);
        let row35 = report.table.iter().find(|r| r.d == 35).unwrap();
        assert_eq!(row35.least_prime, 71);
        assert!((row35.ratio.unwrap() - 0.1605).abs() < 1e-3);
        assert!(report.table.iter().all(|r| r.least_prime % r.d == 1 % r.d));
    }

    #[test]
    fn gauge_skips_non_coprime() {
        let report = heathbrown_gauge(12, 4);
        assert!(report.table.iter().all(|r| r.d % 2 == 1));
        let row9 = report.table.iter().find(|r| r.d == 9).unwrap();
        assert_eq!(row9.least_prime, 13);
    }
}
