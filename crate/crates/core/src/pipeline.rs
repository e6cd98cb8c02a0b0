//! End-to-end orchestration: sieve → modulus → harvest → extra prime →
//! zero-sum families → certificates, persisted as one JSON record per line.
//!
//! Every stage's record is flushed before the next stage starts. A run can be
//! resumed from the records of an interrupted one: completed stage records
//! are replayed instead of recomputed, so the final stream is byte-identical
//! to an uninterrupted run with the same configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arith::{self, Natural};
use crate::assemble::{assemble_carmichael, find_g0, CarmichaelCertificate, CountClass, TargetClass};
use crate::extraprime::{default_k1_max, find_k1, ExtraPrime};
use crate::harvest::{select_k0, HarvestError, HarvestedPrimes, K0Selection};
use crate::lbuilder::{assemble_l, lambda_bound_check, prune_exceptional, LambdaBoundReport, Modulus, PruneConfig, PruneLog};
use crate::rational::Rational;
use crate::sieve::{build_q, density_report, SieveParams, SmoothPrimeSet};
use crate::zerosum::{davenport_bound, find_zero_sum_sets, select_h, HSelection, SearchConfig, ZeroSumFamily, ZeroSumRequest};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub y: u64,
    pub theta: Rational,
    /// Exponent of the divisor cap `x^b` used when pruning `L`.
    pub b: Rational,
    /// Prime bound for pruning; `None` skips pruning.
    pub prune_x: Option<u64>,
    pub prune_samples: usize,
    pub k_min: u64,
    pub k_max: u64,
    /// Largest divisor `d | L` harvested; defaults to `L`.
    pub divisor_cap: Option<Natural>,
    /// Largest harvested prime; unbounded by default.
    pub x_bound: Option<Natural>,
    /// Defaults to `max(10^6, ceil(100 ln^2 (L k0)))`.
    pub k1_max: Option<u64>,
    pub h_min: usize,
    /// Defaults to the pool size.
    pub h_max: Option<usize>,
    pub target_count: usize,
    pub g_max: u64,
    pub count_class: TargetClass,
    pub seed: u64,
    pub exhaustive_limit: u64,
    pub index_limit: u64,
    pub max_rounds: usize,
    /// Replaces the sieve and modulus stages with this modulus.
    pub modulus: Option<Natural>,
    /// Replaces the harvest stage with these primes (requires `modulus`).
    pub pool: Option<Vec<Natural>>,
    /// Not part of the fingerprint.
    pub output: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let search = SearchConfig::default();
        PipelineConfig {
            y: 10,
            theta: Rational::new(3, 2),
            b: Rational::new(5, 12),
            prune_x: Some(100_000),
            prune_samples: 64,
            k_min: 1,
            k_max: 1000,
            divisor_cap: None,
            x_bound: None,
            k1_max: None,
            h_min: 1,
            h_max: None,
            target_count: 64,
            g_max: 1000,
            count_class: TargetClass::Prime,
            seed: 0,
            exhaustive_limit: search.exhaustive_limit as u64,
            index_limit: search.index_limit as u64,
            max_rounds: search.max_rounds,
            modulus: None,
            pool: None,
            output: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.modulus.is_none() {
            if self.pool.is_some() {
                return bad("`pool` requires `modulus`".into());
            }
            SieveParams::new(self.y, self.theta).map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if !(self.b.num() > 0 && self.b.lt_int(1)) {
            return bad(format!("b = {} must lie in (0, 1)", self.b));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return bad(format!("empty k range [{}, {}]", self.k_min, self.k_max));
        }
        if self.h_min == 0 || self.h_max.is_some_and(|h| h < self.h_min) {
            return bad(format!("empty h range [{}, {:?}]", self.h_min, self.h_max));
        }
        if self.target_count == 0 || self.g_max == 0 || self.k1_max == Some(0) {
            return bad("target_count, g_max and k1_max must be positive".into());
        }
        if let Some(m) = &self.modulus {
            if m.as_biguint() < &2u32.into() {
                return bad("modulus must be >= 2".into());
            }
        }
        if let Some(p) = self.pool.iter().flatten().find(|p| !arith::is_prime(p)) {
            return bad(format!("pool entry {p} is not prime"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output path excluded.
    pub fn fingerprint(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            exhaustive_limit: self.exhaustive_limit.into(),
            index_limit: self.index_limit.into(),
            max_rounds: self.max_rounds,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Sieve,
    Modulus,
    Harvest,
    ExtraPrime,
    Family,
    Certificate,
    Report,
}

impl RecordKind {
    fn is_checkpoint(self) -> bool {
        !matches!(self, RecordKind::Certificate | RecordKind::Report)
    }
}

/// One line of the record stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub record_kind: RecordKind,
    pub payload: Value,
    pub fingerprint: String,
    /// Logical clock: the record's position in the stream.
    pub timestamp: u64,
}

impl RunRecord {
    pub fn decode<T: DeserializeOwned>(&self) -> Result<T, serde_json::Error> {
        serde_json::from_value(self.payload.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SieveRecord {
    pub q: SmoothPrimeSet,
    pub lower: u64,
    pub upper: Natural,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRecord {
    pub user_supplied: bool,
    pub modulus: Modulus,
    pub lambda_bound: Option<LambdaBoundReport>,
    pub prune: Option<PruneLog>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarvestRecord {
    pub user_supplied: bool,
    pub selection: K0Selection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraPrimeRecord {
    pub extra: Option<ExtraPrime>,
    /// `L k0 k1` with the extra prime, `L k0` without.
    pub working_modulus: Natural,
    pub k1_max: Option<u64>,
    /// Whether `k0 < L^3`; reported, not enforced.
    pub k0_below_l_cubed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub families: Vec<ZeroSumFamily>,
    /// `(h, g0(h))` for every `h` with `|C_h| >= g0(h)`.
    pub viable: Vec<(usize, u64)>,
    pub lambda_m: Natural,
    pub group_order: Natural,
    /// `lambda(M) + ceil(ln |G|)`.
    pub davenport_bound: Natural,
    pub selection: Option<HSelection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Sieve,
    Modulus,
    Harvest,
    ExtraPrime,
    Zerosum,
    Assemble,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    /// Stable snake_case reason code.
    pub code: String,
    pub detail: String,
}

impl fmt::Display for StageFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed ({}): {}", self.stage, self.code, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub status: RunStatus,
    pub certificates: usize,
    pub failure: Option<StageFailure>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Stage(StageFailure),
    #[error("record stream: {0}")]
    Io(#[from] io::Error),
}

/// Append-only record stream, optionally mirrored to a file.
pub struct RecordSink {
    fingerprint: String,
    records: Vec<RunRecord>,
    replay: std::collections::VecDeque<RunRecord>,
    file: Option<File>,
}

impl RecordSink {
    pub fn in_memory(config: &PipelineConfig) -> Self {
        RecordSink {
            fingerprint: config.fingerprint(),
            records: Vec::new(),
            replay: Default::default(),
            file: None,
        }
    }

    /// Starts a fresh stream at `path`, truncating any existing file.
    pub fn create(path: &Path, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let mut sink = Self::in_memory(config);
        sink.file = Some(File::create(path)?);
        Ok(sink)
    }

    /// Reopens `path`, keeping the completed-stage prefix written under the
    /// same configuration. Later records (certificates, reports, or a torn
    /// final line) are discarded and recomputed.
    pub fn resume(path: &Path, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let mut sink = Self::in_memory(config);
        let mut kept = Vec::new();
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let Ok(record) = serde_json::from_str::<RunRecord>(&line?) else { break };
                if record.fingerprint != sink.fingerprint {
                    return Err(PipelineError::Config(format!(
                        "{} was written by a different configuration",
                        path.display()
                    )));
                }
                if !record.record_kind.is_checkpoint() || record.timestamp != kept.len() as u64 {
                    break;
                }
                kept.push(record);
            }
        }
        let mut file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        for record in &kept {
            writeln!(file, "{}", serde_json::to_string(record).expect("record serializes"))?;
        }
        file.flush()?;
        info!("resuming with {} completed stage records", kept.len());
        sink.replay = kept.into();
        sink.file = Some(file);
        Ok(sink)
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    fn push<T: Serialize>(&mut self, kind: RecordKind, payload: &T) -> Result<(), PipelineError> {
        let record = RunRecord {
            record_kind: kind,
            payload: serde_json::to_value(payload).expect("payload serializes"),
            fingerprint: self.fingerprint.clone(),
            timestamp: self.records.len() as u64,
        };
        if let Some(file) = &mut self.file {
            writeln!(file, "{}", serde_json::to_string(&record).expect("record serializes"))?;
            file.flush()?;
        }
        self.records.push(record);
        Ok(())
    }

    /// Runs `compute` unless a replayed record of `kind` is next in line.
    fn stage<T, F>(&mut self, kind: RecordKind, compute: F) -> Result<T, PipelineError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, PipelineError>,
    {
        if self.replay.front().is_some_and(|r| r.record_kind == kind) {
            let record = self.replay.pop_front().expect("front checked");
            if let Ok(payload) = record.decode::<T>() {
                self.records.push(record);
                return Ok(payload);
            }
            warn!("replayed {kind:?} record does not decode; recomputing");
            self.replay.clear();
        } else {
            self.replay.clear();
        }
        let payload = compute()?;
        self.push(kind, &payload)?;
        Ok(payload)
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub certificates: Vec<CarmichaelCertificate>,
    pub records: Vec<RunRecord>,
}

fn fail(stage: Stage, code: &str, detail: impl fmt::Display) -> PipelineError {
    PipelineError::Stage(StageFailure {
        stage,
        code: code.into(),
        detail: detail.to_string(),
    })
}

/// Runs every stage, recording each before the next starts. A stage failure
/// is itself recorded as a final `report` record before being returned.
pub fn run_pipeline(config: &PipelineConfig, sink: &mut RecordSink) -> Result<PipelineOutcome, PipelineError> {
    config.validate()?;
    match run_stages(config, sink) {
        Ok(certificates) => {
            let report = ReportRecord {
                status: RunStatus::Completed,
                certificates: certificates.len(),
                failure: None,
            };
            sink.push(RecordKind::Report, &report)?;
            Ok(PipelineOutcome {
                certificates,
                records: sink.records.clone(),
            })
        }
        Err(PipelineError::Stage(failure)) => {
            let report = ReportRecord {
                status: RunStatus::Failed,
                certificates: 0,
                failure: Some(failure.clone()),
            };
            sink.push(RecordKind::Report, &report)?;
            Err(PipelineError::Stage(failure))
        }
        Err(other) => Err(other),
    }
}

fn run_stages(config: &PipelineConfig, sink: &mut RecordSink) -> Result<Vec<CarmichaelCertificate>, PipelineError> {
    let modulus = match &config.modulus {
        Some(m) => sink.stage(RecordKind::Modulus, || {
            let modulus = Modulus::from_value(m).map_err(|e| fail(Stage::Modulus, "invalid_modulus", e))?;
            Ok(ModulusRecord {
                user_supplied: true,
                modulus,
                lambda_bound: None,
                prune: None,
            })
        })?,
        None => {
            let sieve = sink.stage(RecordKind::Sieve, || sieve_stage(config))?;
            sink.stage(RecordKind::Modulus, || modulus_stage(config, &sieve.q))?
        }
    };
    let l = modulus.modulus;
    info!("L = {} (lambda {})", l.value, l.lambda);

    let harvest = sink.stage(RecordKind::Harvest, || harvest_stage(config, &l))?;
    let k0 = harvest.selection.k0;
    info!("k0 = {k0}, |P_k0| = {}", harvest.selection.pool.len());

    let extra = sink.stage(RecordKind::ExtraPrime, || extra_prime_stage(config, &l, k0))?;
    let m = extra.working_modulus.clone();

    let mut pool = harvest.selection.pool.clone();
    if let Some(e) = &extra.extra {
        pool.entries.retain(|entry| entry.p != e.p);
    }
    let family = sink.stage(RecordKind::Family, || family_stage(config, &pool, &m))?;
    let Some(selection) = &family.selection else {
        return Err(fail(
            Stage::Zerosum,
            "no_zero_sum_family",
            format!(
                "no h in the searched range has enough disjoint zero-sum sets modulo {m} (pool of {})",
                pool.len()
            ),
        ));
    };

    let h = selection.h;
    let g0 = family
        .viable
        .iter()
        .find(|(vh, _)| *vh == h)
        .map(|&(_, g)| g)
        .expect("selected h is viable");
    let sets = &family
        .families
        .iter()
        .find(|f| f.h == h)
        .expect("selected h was searched")
        .sets;
    let mut certificates = Vec::new();
    for group in sets.chunks_exact(g0 as usize) {
        let cert = assemble_carmichael(group, extra.extra.as_ref(), &m)
            .map_err(|e| fail(Stage::Assemble, "assembly_failed", e))?;
        if !config.count_class.matches(cert.factor_count) {
            return Err(fail(
                Stage::Assemble,
                "class_mismatch",
                format!("factor count {} is not {}", cert.factor_count, config.count_class),
            ));
        }
        sink.push(RecordKind::Certificate, &cert)?;
        certificates.push(cert);
    }
    Ok(certificates)
}

fn sieve_stage(config: &PipelineConfig) -> Result<SieveRecord, PipelineError> {
    let params = SieveParams::new(config.y, config.theta).map_err(|e| PipelineError::Config(e.to_string()))?;
    let q = build_q(params).map_err(|e| fail(Stage::Sieve, "sieve_failed", e))?;
    if q.is_empty() {
        return Err(fail(Stage::Sieve, "empty_q", format!("no smooth primes for y = {}, theta = {}", config.y, config.theta)));
    }
    Ok(SieveRecord {
        lower: params.lower(),
        upper: params.upper_exact().into(),
        density: density_report(&q),
        q,
    })
}

fn modulus_stage(config: &PipelineConfig, q: &SmoothPrimeSet) -> Result<ModulusRecord, PipelineError> {
    let full = assemble_l(q, &Default::default()).map_err(|e| fail(Stage::Modulus, "invalid_modulus", e))?;
    let (modulus, prune) = match config.prune_x {
        Some(x) => {
            let prune_config = PruneConfig {
                b: config.b,
                seed: config.seed,
            };
            let (pruned, log) = prune_exceptional(&full, x, config.prune_samples, &prune_config)
                .map_err(|e| fail(Stage::Modulus, "prune_failed", e))?;
            (pruned, Some(log))
        }
        None => (full, None),
    };
    let lambda_bound = lambda_bound_check(&modulus, q);
    Ok(ModulusRecord {
        user_supplied: false,
        modulus,
        lambda_bound: Some(lambda_bound),
        prune,
    })
}

fn harvest_stage(config: &PipelineConfig, l: &Modulus) -> Result<HarvestRecord, PipelineError> {
    if let Some(primes) = &config.pool {
        let pool = HarvestedPrimes::from_primes(&l.value, config.k_min, primes);
        if pool.is_empty() {
            return Err(fail(Stage::Harvest, "no_viable_k", "the supplied pool is empty"));
        }
        return Ok(HarvestRecord {
            user_supplied: true,
            selection: K0Selection {
                k0: config.k_min,
                counts: vec![(config.k_min, pool.len())],
                pool,
            },
        });
    }
    let cap = config.divisor_cap.clone().unwrap_or_else(|| l.value.clone());
    match select_k0(l, config.k_min, config.k_max, &cap, config.x_bound.as_ref()) {
        Ok(selection) => Ok(HarvestRecord {
            user_supplied: false,
            selection,
        }),
        Err(e @ HarvestError::NoViableK { .. }) => Err(fail(Stage::Harvest, "no_viable_k", e)),
        Err(e) => Err(fail(Stage::Harvest, "harvest_failed", e)),
    }
}

fn extra_prime_stage(config: &PipelineConfig, l: &Modulus, k0: u64) -> Result<ExtraPrimeRecord, PipelineError> {
    let base: Natural = (l.value.as_biguint() * k0).into();
    let k0_below_l_cubed = num_bigint::BigUint::from(k0) < l.value.as_biguint().pow(3);
    if !config.count_class.uses_extra_prime() {
        return Ok(ExtraPrimeRecord {
            extra: None,
            working_modulus: base,
            k1_max: None,
            k0_below_l_cubed,
        });
    }
    let k1_max = config.k1_max.unwrap_or_else(|| default_k1_max(&base));
    let extra = find_k1(l, k0, k1_max).map_err(|e| fail(Stage::ExtraPrime, "no_extra_prime", e))?;
    info!("k1 = {}, P = {}", extra.k1, extra.p);
    Ok(ExtraPrimeRecord {
        working_modulus: extra.working_modulus(),
        extra: Some(extra),
        k1_max: Some(k1_max),
        k0_below_l_cubed,
    })
}

fn family_stage(config: &PipelineConfig, pool: &HarvestedPrimes, m: &Natural) -> Result<FamilyRecord, PipelineError> {
    if pool.is_empty() {
        return Err(fail(Stage::Zerosum, "empty_pool", "no pool primes remain"));
    }
    let h_max = config.h_max.unwrap_or(pool.len()).min(pool.len());
    if config.h_min > h_max {
        return Err(fail(
            Stage::Zerosum,
            "pool_too_small",
            format!("pool of {} is smaller than h_min = {}", pool.len(), config.h_min),
        ));
    }
    let request = ZeroSumRequest {
        h_min: config.h_min,
        h_max,
        target_count: config.target_count,
        disjoint: true,
        search: config.search(),
    };
    let families = find_zero_sum_sets(pool, m, &request).map_err(|e| fail(Stage::Zerosum, "search_failed", e))?;

    let factorization = arith::factorize(m).map_err(|e| fail(Stage::Zerosum, "factorization_incomplete", e))?;
    let lambda_m = arith::carmichael_lambda(&factorization);
    let group_order = arith::euler_phi(&factorization);
    let bound = davenport_bound(&lambda_m, &group_order).map_err(|e| fail(Stage::Zerosum, "search_failed", e))?;

    let mut viable = Vec::new();
    let mut viable_families = BTreeMap::new();
    for (&h, family) in &families {
        let Ok(g0) = find_g0(h as u64, config.count_class, config.g_max) else { continue };
        if !family.is_empty() && family.len() as u64 >= g0 {
            viable.push((h, g0));
            viable_families.insert(h, family.clone());
        }
    }
    let n_bound = bound.to_u64().map_or(usize::MAX, |b| usize::try_from(b).unwrap_or(usize::MAX));
    let selection = select_h(&viable_families, n_bound).ok();
    Ok(FamilyRecord {
        families: families.into_values().collect(),
        viable,
        lambda_m,
        group_order,
        davenport_bound: bound,
        selection,
    })
}

/// Per-stage statistics recovered from a record stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub skipped: usize,
    pub q_size: Option<usize>,
    pub density: Option<f64>,
    pub modulus: Option<Natural>,
    pub lambda: Option<Natural>,
    pub lambda_bound_exponent: Option<Rational>,
    pub lambda_bound_holds: Option<bool>,
    pub k0: Option<u64>,
    /// `|P_k|` value → number of scanned `k` with that pool size.
    pub pool_histogram: BTreeMap<usize, usize>,
    pub pool_size: Option<usize>,
    pub k1: Option<u64>,
    pub extra_prime: Option<Natural>,
    pub hb_ratio: Option<f64>,
    /// `(h, |C_h|)`.
    pub family_sizes: Vec<(usize, usize)>,
    pub selected_h: Option<usize>,
    pub certificates: Vec<CarmichaelCertificate>,
    pub status: Option<RunStatus>,
    pub failure: Option<StageFailure>,
}

impl Summary {
    pub fn certificates_by_class(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for cert in &self.certificates {
            let key = serde_json::to_value(cert.count_class)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }
}

/// Reads a record stream, skipping (and counting) lines that do not parse.
pub fn summarize<R: BufRead>(reader: R) -> io::Result<Summary> {
    let mut summary = Summary::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| absorb(&mut summary, &r).map_err(|e| e.to_string()))
        {
            Ok(()) => summary.records += 1,
            Err(e) => {
                warn!("skipping malformed record on line {}: {e}", lineno + 1);
                summary.skipped += 1;
            }
        }
    }
    Ok(summary)
}

pub fn report(path: &Path) -> io::Result<Summary> {
    summarize(BufReader::new(File::open(path)?))
}

fn absorb(s: &mut Summary, record: &RunRecord) -> Result<(), serde_json::Error> {
    match record.record_kind {
        RecordKind::Sieve => {
            let r: SieveRecord = record.decode()?;
            s.q_size = Some(r.q.len());
            s.density = Some(r.density);
        }
        RecordKind::Modulus => {
            let r: ModulusRecord = record.decode()?;
            s.modulus = Some(r.modulus.value.clone());
            s.lambda = Some(r.modulus.lambda.clone());
            if let Some(b) = r.lambda_bound {
                s.lambda_bound_exponent = Some(b.bound_exponent);
                s.lambda_bound_holds = Some(b.holds);
            }
        }
        RecordKind::Harvest => {
            let r: HarvestRecord = record.decode()?;
            s.k0 = Some(r.selection.k0);
            s.pool_size = Some(r.selection.pool.len());
            s.pool_histogram.clear();
            for (_, count) in r.selection.counts {
                *s.pool_histogram.entry(count).or_insert(0) += 1;
            }
        }
        RecordKind::ExtraPrime => {
            let r: ExtraPrimeRecord = record.decode()?;
            if let Some(e) = r.extra {
                s.k1 = Some(e.k1);
                s.extra_prime = Some(e.p);
                s.hb_ratio = e.hb_ratio;
            }
        }
        RecordKind::Family => {
            let r: FamilyRecord = record.decode()?;
            s.family_sizes = r.families.iter().map(|f| (f.h, f.len())).collect();
            s.selected_h = r.selection.map(|sel| sel.h);
        }
        RecordKind::Certificate => s.certificates.push(record.decode()?),
        RecordKind::Report => {
            let r: ReportRecord = record.decode()?;
            s.status = Some(r.status);
            s.failure = r.failure;
        }
    }
    Ok(())
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {} ({} skipped)", self.records, self.skipped)?;
        if let Some(q) = self.q_size {
            writeln!(f, "|Q| = {q}, density ratio {:.4}", self.density.unwrap_or(0.0))?;
        }
        if let (Some(l), Some(lambda)) = (&self.modulus, &self.lambda) {
            write!(f, "L = {l}, lambda(L) = {lambda}")?;
            match (self.lambda_bound_exponent, self.lambda_bound_holds) {
                (Some(e), Some(holds)) => writeln!(f, " vs e^({e}): {}", if holds { "within" } else { "EXCEEDS" })?,
                _ => writeln!(f)?,
            }
        }
        if let Some(k0) = self.k0 {
            writeln!(f, "k0 = {k0}, |P_k0| = {}", self.pool_size.unwrap_or(0))?;
            let hist: Vec<String> = self.pool_histogram.iter().map(|(size, n)| format!("{size}:{n}")).collect();
            writeln!(f, "|P_k| histogram (size:count): {}", hist.join(" "))?;
        }
        if let (Some(k1), Some(p)) = (self.k1, &self.extra_prime) {
            match self.hb_ratio {
                Some(r) => writeln!(f, "k1 = {k1}, P = {p}, hb_ratio = {r:.4}")?,
                None => writeln!(f, "k1 = {k1}, P = {p}")?,
            }
        }
        if !self.family_sizes.is_empty() {
            let sizes: Vec<String> = self.family_sizes.iter().map(|(h, c)| format!("{h}:{c}")).collect();
            writeln!(f, "|C_h| (h:count): {}", sizes.join(" "))?;
            if let Some(h) = self.selected_h {
                writeln!(f, "selected h = {h}")?;
            }
        }
        if !self.certificates.is_empty() {
            writeln!(f, "certificates:")?;
            writeln!(f, "  {:>6} {:>14}  n", "count", "class")?;
            for c in &self.certificates {
                let class = match c.count_class {
                    CountClass::Prime => "prime",
                    CountClass::PerfectSquare => "perfect_square",
                    CountClass::PerfectCube => "perfect_cube",
                    CountClass::PerfectPower => "perfect_power",
                    CountClass::None => "none",
                };
                writeln!(f, "  {:>6} {:>14}  {}", c.factor_count, class, c.n)?;
            }
            let by_class: Vec<String> = self.certificates_by_class().iter().map(|(k, v)| format!("{k}:{v}")).collect();
            writeln!(f, "by class: {}", by_class.join(" "))?;
        }
        if let Some(status) = self.status {
            match &self.failure {
                Some(failure) => writeln!(f, "status: {status:?}; {failure}")?,
                None => writeln!(f, "status: {status:?}")?,
            }
        }
        Ok(())
    }
}

/// Writes records as JSON lines, e.g. for exporting an in-memory run.
pub fn write_records(path: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classical(class: TargetClass) -> PipelineConfig {
        PipelineConfig {
            modulus: Some(120u64.into()),
            pool: Some([7u64, 11, 13, 31, 41, 61].map(Natural::from).to_vec()),
            count_class: class,
            ..Default::default()
        }
    }

    #[test]
    fn square_class_on_120_gives_41041() {
        let mut config = classical(TargetClass::SQUARE);
        config.h_min = 4;
        config.h_max = Some(4);
        let mut sink = RecordSink::in_memory(&config);
        let out = run_pipeline(&config, &mut sink).unwrap();
        assert_eq!(out.certificates.len(), 1);
        assert_eq!(out.certificates[0].n, 41041u64.into());
        assert_eq!(out.certificates[0].count_class, CountClass::PerfectSquare);
        let kinds: Vec<RecordKind> = out.records.iter().map(|r| r.record_kind).collect();
        assert_eq!(
            kinds,
            [
                RecordKind::Modulus,
                RecordKind::Harvest,
                RecordKind::ExtraPrime,
                RecordKind::Family,
                RecordKind::Certificate,
                RecordKind::Report
            ]
        );
    }

    #[test]
    fn prime_class_on_120_uses_extra_prime() {
        let config = classical(TargetClass::Prime);
        let out = run_pipeline(&config, &mut RecordSink::in_memory(&config)).unwrap();
        assert!(!out.certificates.is_empty());
        for cert in &out.certificates {
            assert!(cert.includes_extra_prime);
            assert!(cert.factors.contains(&241u64.into()));
            assert!(arith::is_prime_u64(cert.factor_count));
            assert!(cert.recheck());
        }
    }

    #[test]
    fn empty_harvest_halts_at_harvest() {
        // 2 * 3 = 6: d in {1,2,3,6}, k = 4 gives 5, 9, 13, 25 -> 5 and 13 prime;
        // x_bound = 4 excludes all of them.
        let config = PipelineConfig {
            modulus: Some(6u64.into()),
            k_min: 4,
            k_max: 4,
            x_bound: Some(4u64.into()),
            ..Default::default()
        };
        match run_pipeline(&config, &mut RecordSink::in_memory(&config)) {
            Err(PipelineError::Stage(f)) => {
                assert_eq!(f.stage, Stage::Harvest);
                assert_eq!(f.code, "no_viable_k");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(PipelineConfig::from_toml("y = 10\ntheta = \"2.5\"").is_err());
        assert!(PipelineConfig::from_toml("k_min = 5\nk_max = 4").is_err());
        assert!(PipelineConfig::from_toml("b = \"1\"").is_err());
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
        let c = PipelineConfig::from_toml("y = 12\ntheta = \"3/2\"\ncount_class = \"cube\"").unwrap();
        assert_eq!(c.count_class, TargetClass::CUBE);
    }

    #[test]
    fn fingerprint_ignores_output_path() {
        let a = PipelineConfig::default();
        let b = PipelineConfig {
            output: Some("elsewhere.jsonl".into()),
            ..Default::default()
        };
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = PipelineConfig { seed: 1, ..Default::default() };
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn resume_reproduces_stream() {
        let dir = tempfile::tempdir().unwrap();
        let config = classical(TargetClass::Prime);
        let full_path = dir.path().join("full.jsonl");
        run_pipeline(&config, &mut RecordSink::create(&full_path, &config).unwrap()).unwrap();
        let full = fs::read_to_string(&full_path).unwrap();
        let lines: Vec<&str> = full.lines().collect();
        for cut in 0..lines.len() {
            let path = dir.path().join(format!("cut{cut}.jsonl"));
            let mut partial = lines[..cut].join("\n");
            if cut > 0 {
                partial.push('\n');
            }
            partial.push_str("{\"torn");
            fs::write(&path, partial).unwrap();
            run_pipeline(&config, &mut RecordSink::resume(&path, &config).unwrap()).unwrap();
            assert_eq!(fs::read_to_string(&path).unwrap(), full, "cut at {cut}");
        }
        let other = PipelineConfig { seed: 9, ..config };
        assert!(RecordSink::resume(&full_path, &other).is_err());
    }

    #[test]
    fn summary_replays_records() {
        let config = classical(TargetClass::Prime);
        let out = run_pipeline(&config, &mut RecordSink::in_memory(&config)).unwrap();
        let mut text: String = out
            .records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect();
        text.push_str("not json\n");
        let summary = summarize(text.as_bytes()).unwrap();
        assert_eq!(summary.records, out.records.len());
        assert_eq!(summary.skipped, 1);
        assert_eq!(summary.certificates, out.certificates);
        assert_eq!(summary.extra_prime, Some(241u64.into()));
        assert_eq!(summary.status, Some(RunStatus::Completed));
        assert!(summary.to_string().contains("certificates:"));

        let empty = summarize(&b""[..]).unwrap();
        assert_eq!(empty, Summary::default());
    }
}
