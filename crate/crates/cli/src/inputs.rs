//! Loading the JSON artifacts written by earlier subcommands. Each loader
//! accepts both the full record a subcommand emits and the bare core type.

use std::fs;
use std::path::Path;

use korselt_core::extraprime::ExtraPrime;
use korselt_core::harvest::{HarvestedPrimes, K0Selection};
use korselt_core::lbuilder::Modulus;
use korselt_core::pipeline::{HarvestRecord, ModulusRecord, SieveRecord};
use korselt_core::{Natural, SmoothPrimeSet, ZeroSumFamily};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

fn read<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{} is not a {what} file: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SieveInput {
    Record(SieveRecord),
    Bare(SmoothPrimeSet),
}

pub fn smooth_primes(path: &Path) -> Result<SmoothPrimeSet, CliError> {
    Ok(match read(path, "sieve")? {
        SieveInput::Record(r) => r.q,
        SieveInput::Bare(q) => q,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModulusInput {
    Record(ModulusRecord),
    Bare(Modulus),
}

pub fn modulus(path: &Path) -> Result<Modulus, CliError> {
    let m = match read(path, "modulus")? {
        ModulusInput::Record(r) => r.modulus,
        ModulusInput::Bare(m) => m,
    };
    m.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(m)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PoolInput {
    Record(HarvestRecord),
    Selection(K0Selection),
    Pool(HarvestedPrimes),
    Primes(Vec<Natural>),
}

/// A pool file; a bare prime list becomes a pool over `modulus` with `k = 1`.
pub fn pool(path: &Path, modulus: &Natural) -> Result<HarvestedPrimes, CliError> {
    Ok(match read(path, "pool")? {
        PoolInput::Record(r) => r.selection.pool,
        PoolInput::Selection(s) => s.pool,
        PoolInput::Pool(p) => p,
        PoolInput::Primes(primes) => HarvestedPrimes::from_primes(modulus, 1, &primes),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyInput {
    Many(Vec<ZeroSumFamily>),
    One(ZeroSumFamily),
}

pub fn families(path: &Path) -> Result<Vec<ZeroSumFamily>, CliError> {
    Ok(match read(path, "zero-sum family")? {
        FamilyInput::Many(v) => v,
        FamilyInput::One(f) => vec![f],
    })
}

pub fn extra_prime(path: &Path) -> Result<ExtraPrime, CliError> {
    read(path, "extra-prime")
}

pub fn list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| CliError::Invalid(format!("bad {what} {s:?}: {e}"))))
        .collect()
}
