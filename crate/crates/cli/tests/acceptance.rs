//! Acceptance suite: one PASS/FAIL line per criterion, each with a pinned
//! runtime limit. Every expected value is recomputed here by an oracle that
//! shares no code with the library beyond the call under test.

use std::process::Command;
use std::time::{Duration, Instant};

use korselt_core::arith::{self, Natural};
use korselt_core::assemble::{self, CountClass, TargetClass};
use korselt_core::extraprime;
use korselt_core::lbuilder;
use korselt_core::pipeline::{self, PipelineConfig, RecordSink};
use korselt_core::sieve::{self, SieveParams};
use korselt_core::zerosum::{self, GroupSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sieve_of_eratosthenes(n: usize) -> Vec<bool> {
    let mut is_prime = vec![true; n + 1];
    is_prime[0] = false;
    if n >= 1 {
        is_prime[1] = false;
    }
    let mut i = 2;
    while i * i <= n {
        if is_prime[i] {
            let mut j = i * i;
            while j <= n {
                is_prime[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    is_prime
}

fn trial_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn trial_largest_factor(mut n: u64) -> u64 {
    let mut largest = 1;
    let mut d = 2;
    while d * d <= n {
        while n % d == 0 {
            largest = d;
            n /= d;
        }
        d += 1;
    }
    largest.max(n)
}

/// Korselt's criterion on machine words, by trial division.
fn korselt_oracle(factors: &[u64]) -> bool {
    let n = factors.iter().try_fold(1u128, |acc, &p| Some(acc * p as u128));
    let Some(n) = n else { return false };
    let mut sorted = factors.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len() == factors.len()
        && factors.len() >= 3
        && n % 2 == 1
        && factors.iter().all(|&p| trial_prime(p) && (n - 1) % (p as u128 - 1) == 0)
}

fn u64s(v: &[Natural]) -> Vec<u64> {
    v.iter().map(|p| p.to_u64().expect("fits u64")).collect()
}

fn classical_reconstruction() -> Check {
    let config = PipelineConfig {
        modulus: Some(120u64.into()),
        pool: Some([7u64, 11, 13, 31, 41, 61].map(Natural::from).to_vec()),
        h_min: 4,
        h_max: Some(4),
        count_class: TargetClass::SQUARE,
        ..Default::default()
    };
    let out = pipeline::run_pipeline(&config, &mut RecordSink::in_memory(&config)).map_err(|e| e.to_string())?;
    let family = out
        .records
        .iter()
        .find(|r| r.record_kind == pipeline::RecordKind::Family)
        .ok_or("no family record")?
        .decode::<pipeline::FamilyRecord>()
        .map_err(|e| e.to_string())?;
    let c4 = family.families.iter().find(|f| f.h == 4).ok_or("no C_4")?;
    ensure(c4.sets.iter().any(|s| u64s(s) == [7, 11, 13, 41]), || {
        format!("C_4 lacks {{7,11,13,41}}: {:?}", c4.sets)
    })?;
    ensure(out.certificates.len() == 1, || format!("{} certificates", out.certificates.len()))?;
    let cert = &out.certificates[0];
    ensure(cert.n == 41041u64.into(), || format!("n = {}", cert.n))?;
    ensure(cert.factor_count == 4, || format!("factor_count {}", cert.factor_count))?;
    ensure(cert.count_class == CountClass::PerfectSquare, || format!("{:?}", cert.count_class))?;
    ensure(korselt_oracle(&u64s(&cert.factors)), || "independent Korselt check failed".into())?;
    Ok("n = 41041, 4 factors, perfect square".into())
}

fn chernick_baseline() -> Check {
    let k_max = 1000u64;
    let certs = assemble::chernick_search(k_max);
    let sieve = sieve_of_eratosthenes(18 * k_max as usize + 1);
    let expected: Vec<u64> = (1..=k_max)
        .filter(|&k| [6 * k + 1, 12 * k + 1, 18 * k + 1].iter().all(|&p| sieve[p as usize]))
        .collect();
    let got: Vec<u64> = certs.iter().map(|c| (c.factors[0].to_u64().unwrap() - 1) / 6).collect();
    ensure(got == expected, || format!("k mismatch: {} vs {} entries", got.len(), expected.len()))?;
    ensure(certs.first().is_some_and(|c| c.n == 1729u64.into()), || "k = 1 is not 1729".into())?;
    for cert in &certs {
        let report = assemble::verify_korselt(&cert.factors).map_err(|e| e.to_string())?;
        ensure(report.passed && korselt_oracle(&u64s(&cert.factors)), || format!("{} fails Korselt", cert.n))?;
    }
    Ok(format!("{} certificates for k <= {k_max}", certs.len()))
}

fn sieve_exactness() -> Check {
    let q = sieve::build_q(SieveParams::new(10, "1.5".parse().unwrap()).unwrap()).map_err(|e| e.to_string())?;
    ensure(u64s(&q.primes) == [17, 19, 29, 31], || format!("Q(10, 1.5) = {:?}", q.primes))?;
    let mut checked = 0;
    for (theta, a, b) in [("1.2", 6u32, 5u32), ("1.5", 3, 2), ("1.8", 9, 5)] {
        for y in 3..=30u64 {
            let params = SieveParams::new(y, theta.parse().unwrap()).unwrap();
            let got = u64s(&sieve::build_q(params).map_err(|e| e.to_string())?.primes);
            // floor(y^(a/b)) exactly: the largest m with m^b <= y^a.
            let ya = (y as u128).pow(a);
            let hi = (1u64..).take_while(|&m| (m as u128).pow(b) <= ya).last().unwrap();
            let lo = ((y as f64).powf(a as f64 / b as f64) / (y as f64).ln()).ceil() as u64;
            let expected: Vec<u64> = (lo.max(2)..=hi)
                .filter(|&m| trial_prime(m) && trial_largest_factor(m - 1) <= y)
                .collect();
            ensure(got == expected, || format!("y = {y}, theta = {theta}: {got:?} vs {expected:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} parameter pairs match trial division"))
}

fn lambda_bound() -> Check {
    let mut notes = Vec::new();
    for y in [10u64, 20] {
        let q = sieve::build_q(SieveParams::new(y, "3/2".parse().unwrap()).unwrap()).map_err(|e| e.to_string())?;
        let l = lbuilder::assemble_l(&q, &Default::default()).map_err(|e| e.to_string())?;
        let report = lbuilder::lambda_bound_check(&l, &q);
        // Independent lambda: lcm of q - 1 over the squarefree L.
        let lambda = u64s(&q.primes).iter().fold(1u128, |acc, &p| {
            let a = acc;
            let b = (p - 1) as u128;
            let (mut x, mut z) = (a, b);
            while z != 0 {
                (x, z) = (z, x % z);
            }
            a / x * b
        });
        ensure(l.lambda == Natural::from(lambda), || format!("lambda {} vs oracle {lambda}", l.lambda))?;
        let exponent = 3.0 * y as f64;
        let margin = exponent - (lambda as f64).ln();
        ensure(report.holds && margin > 1e-9, || format!("y = {y}: lambda {lambda} vs e^{exponent}"))?;
        notes.push(format!("y={y}: {lambda} <= e^{exponent}"));
    }
    Ok(notes.join(", "))
}

fn davenport_suite() -> Check {
    let mut groups: Vec<(Vec<u64>, Option<u64>)> = (1..=12).map(|m| (vec![m], Some(m))).collect();
    groups.push((vec![2, 2], Some(3)));
    groups.extend([(vec![2, 4], None), (vec![3, 3], None), (vec![2, 2, 2], None)]);
    for (orders, expected) in groups {
        let g = GroupSpec::cyclic(&orders);
        let d = zerosum::davenport_bruteforce(&g, zerosum::DEFAULT_BRUTE_FORCE_LIMIT).map_err(|e| e.to_string())?;
        if let Some(e) = expected {
            ensure(d == e, || format!("n({orders:?}) = {d}, expected {e}"))?;
        }
        let bound = zerosum::davenport_bound(&g.exponent().unwrap(), &g.order().unwrap()).map_err(|e| e.to_string())?;
        ensure(Natural::from(d) <= bound, || format!("n({orders:?}) = {d} exceeds bound {bound}"))?;
    }
    Ok("cyclic m <= 12 exact, Z2 x Z2 = 3, all within the bound".into())
}

/// Identity-sum subsets of `seq` in Z_m with size in `[lo, hi]`, by plain enumeration.
fn naive_identity_count(seq: &[u64], m: u64, lo: usize, hi: usize) -> u64 {
    let r = seq.len();
    (1u32..(1 << r))
        .filter(|mask| {
            let size = mask.count_ones() as usize;
            let sum: u64 = (0..r).filter(|i| mask >> i & 1 == 1).map(|i| seq[i]).sum();
            size >= lo && size <= hi && sum % m == 0
        })
        .count() as u64
}

fn binom(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn agp_counting() -> Check {
    let mut notes = Vec::new();
    for (m, r, t) in [(3u64, 9usize, 4usize), (5, 12, 6)] {
        let report = zerosum::agp_count_check(&GroupSpec::cyclic(&[m]), r, t, 200, 2024).map_err(|e| e.to_string())?;
        ensure(report.trials == 200 && report.violations == 0, || {
            format!("Z{m}: {} violations in {} trials", report.violations, report.trials)
        })?;
        // Same statement on an independent sample and counter; n(Z_m) = m.
        let mut rng = ChaCha8Rng::seed_from_u64(7 + m);
        let need_num = binom(r as u64, t as u64);
        let need_den = binom(r as u64, m);
        for _ in 0..200 {
            let seq: Vec<u64> = (0..r).map(|_| rng.gen_range(0..m)).collect();
            let count = naive_identity_count(&seq, m, t - m as usize, t);
            ensure(count as u128 * need_den >= need_num, || format!("Z{m}: {seq:?} has only {count}"))?;
        }
        notes.push(format!("Z{m}: min count {} >= {:.3}", report.min_count, report.bound));
    }
    Ok(notes.join(", "))
}

fn extra_prime_minimality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut worst = 0;
    for _ in 0..500 {
        let d: u64 = rng.gen_range(2..=100_000);
        let base = Natural::from(d);
        let e = extraprime::find_k1_for_base(&base, extraprime::default_k1_max(&base)).map_err(|e| e.to_string())?;
        ensure(trial_prime(d * e.k1 + 1) && e.p == Natural::from(d * e.k1 + 1), || format!("d = {d}: P wrong"))?;
        ensure((1..e.k1).all(|k| !trial_prime(d * k + 1)), || format!("d = {d}: k1 = {} not minimal", e.k1))?;
        worst = worst.max(e.k1);
    }
    let gauge = extraprime::heathbrown_gauge(50_000, 1);
    ensure(gauge.table.len() == 50_000, || format!("gauge has {} rows", gauge.table.len()))?;
    Ok(format!(
        "500 moduli minimal (largest k1 {worst}); gauge max ratio {:.4} at d = {}",
        gauge.max_ratio, gauge.argmax_d
    ))
}

fn prime_count_pipeline() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_korselt"))
            .args(["pipeline", "--y", "10", "--theta", "1.5", "--class", "prime", "--seed", "11", "-o"])
            .arg(&path)
            .output()
            .expect("binary runs");
        (out, std::fs::read(&path).unwrap_or_default())
    };
    let (first, bytes_a) = run("a.jsonl");
    let (_, bytes_b) = run("b.jsonl");
    ensure(!bytes_a.is_empty() && bytes_a == bytes_b, || "record streams differ between runs".into())?;
    let summary = pipeline::summarize(&bytes_a[..]).map_err(|e| e.to_string())?;
    ensure(summary.skipped == 0, || "unparseable records".into())?;
    match first.status.code() {
        Some(0) => {
            ensure(!summary.certificates.is_empty(), || "success without certificates".into())?;
            for cert in &summary.certificates {
                ensure(arith::is_prime_u64(cert.factor_count) && trial_prime(cert.factor_count), || {
                    format!("factor count {} not prime", cert.factor_count)
                })?;
                ensure(cert.recheck(), || format!("{} fails re-verification", cert.n))?;
                let n = cert.n.as_biguint();
                for p in &cert.factors {
                    let pm1 = p.as_biguint() - 1u32;
                    ensure((n - 1u32) % &pm1 == 0u32.into(), || format!("{p} - 1 does not divide n - 1"))?;
                }
            }
            Ok(format!("{} certificate(s), deterministic", summary.certificates.len()))
        }
        Some(3) => {
            let stderr = String::from_utf8_lossy(&first.stderr);
            let json = stderr
                .lines()
                .find_map(|l| l.strip_prefix("error: "))
                .ok_or_else(|| format!("no failure line in {stderr:?}"))?;
            let failure: pipeline::StageFailure = serde_json::from_str(json).map_err(|e| e.to_string())?;
            ensure(summary.failure.as_ref() == Some(&failure), || "report record disagrees with stderr".into())?;
            Ok(format!("halted: {} / {} (deterministic)", failure.stage, failure.code))
        }
        other => Err(format!("unexpected exit {other:?}: {}", String::from_utf8_lossy(&first.stderr))),
    }
}

fn primality_oracle() -> Check {
    let n = 1_000_000usize;
    let sieve = sieve_of_eratosthenes(n);
    if let Some(bad) = (0..=n as u64).find(|&m| arith::is_prime(&Natural::from(m)) != sieve[m as usize]) {
        return Err(format!("disagreement at {bad}"));
    }
    Ok(format!("agrees for all n <= {n}"))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 9] = [
        ("classical reconstruction (M = 120 -> 41041)", Duration::from_secs(5), classical_reconstruction),
        ("Chernick baseline k <= 1000", Duration::from_secs(10), chernick_baseline),
        ("sieve exactness y <= 30", Duration::from_secs(30), sieve_exactness),
        ("lambda(L) <= e^(2 theta y)", Duration::from_secs(10), lambda_bound),
        ("Davenport brute force and bound", Duration::from_secs(60), davenport_suite),
        ("subsequence counting theorem", Duration::from_secs(60), agp_counting),
        ("extra-prime minimality and gauge", Duration::from_secs(120), extra_prime_minimality),
        ("prime-count pipeline at y = 10", Duration::from_secs(300), prime_count_pipeline),
        ("primality vs sieve n <= 10^6", Duration::from_secs(30), primality_oracle),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let verdict = match result {
            Ok(detail) if elapsed <= *limit => format!("[PASS] {}. {name}: {detail}", i + 1),
            Ok(detail) => format!("[FAIL] {}. {name}: over time limit; {detail}", i + 1),
            Err(why) => format!("[FAIL] {}. {name}: {why}", i + 1),
        };
        if verdict.starts_with("[FAIL]") {
            failed += 1;
        }
        println!("{verdict} ({:.2}s / limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
