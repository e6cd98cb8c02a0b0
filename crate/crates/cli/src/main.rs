//! `korselt`: command-line access to every stage of the construction and to
//! the end-to-end pipeline.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 pipeline stage
//! failure, 4 verification failure.

mod inputs;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use korselt_core::assemble::{self, TargetClass};
use korselt_core::extraprime::{self, default_k1_max};
use korselt_core::harvest;
use korselt_core::lbuilder::{self, PruneConfig};
use korselt_core::pipeline::{self, ModulusRecord, PipelineConfig, PipelineError, RecordSink, SieveRecord};
use korselt_core::sieve::{self, SieveParams};
use korselt_core::zerosum::{self, GroupSpec, SearchConfig, ZeroSumRequest};
use korselt_core::{Natural, Rational};
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Stage(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Stage(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

#[derive(Parser)]
#[command(name = "korselt", version, about = "Carmichael numbers with a prescribed class of prime-factor counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write JSON here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Primes q in [y^theta / ln y, y^theta] with q - 1 y-smooth.
    Sieve {
        #[arg(long)]
        y: u64,
        #[arg(long)]
        theta: Rational,
        #[arg(long, default_value_t = sieve::SieveConfig::default().max_upper)]
        max_upper: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Multiply a sieve output (minus exclusions) into L and check its bounds.
    BuildL {
        #[arg(long)]
        from: PathBuf,
        /// Primes to leave out, comma-separated.
        #[arg(long)]
        exclude: Option<String>,
        /// Prune divisors with too few primes = 1 mod d below this bound.
        #[arg(long)]
        prune_x: Option<u64>,
        #[arg(long, default_value_t = 64)]
        prune_samples: usize,
        #[arg(long, default_value = "5/12")]
        b: Rational,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Primes p = d k + 1 with d | L, scanned over a k-range.
    Harvest {
        #[arg(long)]
        l: PathBuf,
        #[arg(long, default_value_t = 1)]
        k_min: u64,
        #[arg(long)]
        k_max: u64,
        /// Largest divisor d; defaults to L.
        #[arg(long)]
        cap: Option<Natural>,
        #[arg(long)]
        x_bound: Option<Natural>,
        /// Number of divisors in the Brun-Titchmarsh sanity report.
        #[arg(long, default_value_t = 16)]
        bt_sample: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Least k1 with L k0 k1 + 1 prime.
    ExtraPrime {
        #[arg(long)]
        l: PathBuf,
        #[arg(long)]
        k0: u64,
        #[arg(long)]
        k1_max: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Least prime = residue (mod d) for every d <= d_max, with p / (d ln^2 d).
    HbGauge {
        #[arg(long)]
        d_max: u64,
        #[arg(long, default_value_t = 1)]
        residue: u64,
        /// Omit the per-d table.
        #[arg(long)]
        summary_only: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Subsets of a pool of size h with product = 1 (mod M).
    Zerosum {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        modulus: Natural,
        #[arg(long, default_value_t = 1)]
        h_min: usize,
        #[arg(long)]
        h_max: usize,
        #[arg(long, default_value_t = 64)]
        count: usize,
        #[arg(long)]
        disjoint: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Davenport constant by brute force, with the lambda + ceil(ln |G|) bound.
    Davenport {
        /// Cyclic factor orders, e.g. `2,4`.
        #[arg(long, conflicts_with = "residue")]
        cyclic: Option<String>,
        /// The unit group modulo this integer.
        #[arg(long)]
        residue: Option<Natural>,
        #[arg(long, default_value_t = zerosum::DEFAULT_BRUTE_FORCE_LIMIT)]
        limit: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Identity-subsequence counts of random sequences against C(r,t)/C(r,n).
    AgpCheck {
        #[arg(long)]
        cyclic: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Combine g disjoint sets of a family (and the extra prime) into a certificate.
    Assemble {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        g: usize,
        /// Set size to use when the file holds several families.
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        extra: Option<PathBuf>,
        /// Working modulus; defaults to the family's.
        #[arg(long)]
        modulus: Option<Natural>,
        #[arg(long, default_value = "prime")]
        class: TargetClass,
        #[command(flatten)]
        output: Output,
    },
    /// Korselt's criterion on an explicit factor list.
    Verify {
        #[arg(long)]
        factors: String,
        #[command(flatten)]
        output: Output,
    },
    /// Chernick certificates (6k+1)(12k+1)(18k+1) for k <= k_max.
    Chernick {
        #[arg(long)]
        k_max: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Run every stage, writing JSON-lines records.
    Pipeline(PipelineArgs),
    /// Summarize a record stream.
    Report {
        path: PathBuf,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    y: Option<u64>,
    #[arg(long)]
    theta: Option<Rational>,
    #[arg(long)]
    class: Option<TargetClass>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_min: Option<u64>,
    #[arg(long)]
    k_max: Option<u64>,
    #[arg(long)]
    k1_max: Option<u64>,
    #[arg(long)]
    h_min: Option<usize>,
    #[arg(long)]
    h_max: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    /// Use this modulus instead of the sieve and L stages.
    #[arg(long)]
    modulus: Option<Natural>,
    /// Use these primes instead of the harvest stage (needs --modulus).
    #[arg(long)]
    pool: Option<String>,
    /// Record stream path.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Continue from the completed stages already in the record stream.
    #[arg(long)]
    resume: bool,
}

fn emit<T: Serialize>(value: &T, output: &Output) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(invalid)? + "\n";
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(invalid),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sieve {
            y,
            theta,
            max_upper,
            output,
        } => {
            let params = SieveParams::new(y, theta).map_err(invalid)?;
            let q = sieve::build_q_with(params, &sieve::SieveConfig { max_upper }).map_err(invalid)?;
            let record = SieveRecord {
                lower: params.lower(),
                upper: params.upper_exact().into(),
                density: sieve::density_report(&q),
                q,
            };
            emit(&record, &output)
        }
        Command::BuildL {
            from,
            exclude,
            prune_x,
            prune_samples,
            b,
            seed,
            output,
        } => {
            let q = inputs::smooth_primes(&from)?;
            let excluded: BTreeSet<Natural> = match exclude {
                Some(list) => inputs::list(&list, "prime")?.into_iter().collect(),
                None => BTreeSet::new(),
            };
            let full = lbuilder::assemble_l(&q, &excluded).map_err(invalid)?;
            let (modulus, prune) = match prune_x {
                Some(x) => {
                    let (m, log) = lbuilder::prune_exceptional(&full, x, prune_samples, &PruneConfig { b, seed })
                        .map_err(invalid)?;
                    (m, Some(log))
                }
                None => (full, None),
            };
            let record = ModulusRecord {
                user_supplied: false,
                lambda_bound: Some(lbuilder::lambda_bound_check(&modulus, &q)),
                modulus,
                prune,
            };
            emit(&record, &output)
        }
        Command::Harvest {
            l,
            k_min,
            k_max,
            cap,
            x_bound,
            bt_sample,
            output,
        } => {
            let l = inputs::modulus(&l)?;
            let cap = cap.unwrap_or_else(|| l.value.clone());
            let selection = harvest::select_k0(&l, k_min, k_max, &cap, x_bound.as_ref()).map_err(|e| match e {
                harvest::HarvestError::NoViableK { .. } => CliError::Stage(e.to_string()),
                e => invalid(e),
            })?;
            let brun_titchmarsh =
                harvest::brun_titchmarsh_report(&l, k_min, k_max, &cap, x_bound.as_ref(), bt_sample).map_err(invalid)?;
            #[derive(Serialize)]
            struct HarvestOutput {
                #[serde(flatten)]
                selection: harvest::K0Selection,
                mean_count: f64,
                brun_titchmarsh: Vec<harvest::BrunTitchmarshEntry>,
            }
            emit(
                &HarvestOutput {
                    mean_count: selection.mean_count(),
                    selection,
                    brun_titchmarsh,
                },
                &output,
            )
        }
        Command::ExtraPrime { l, k0, k1_max, output } => {
            let l = inputs::modulus(&l)?;
            if k0 == 0 {
                return Err(invalid("k0 must be >= 1"));
            }
            let base: Natural = (l.value.as_biguint() * k0).into();
            let k1_max = k1_max.unwrap_or_else(|| default_k1_max(&base));
            let extra = extraprime::find_k1(&l, k0, k1_max).map_err(|e| match e {
                extraprime::ExtraPrimeError::NotFound { .. } => CliError::Stage(e.to_string()),
                e => invalid(e),
            })?;
            emit(&extra, &output)
        }
        Command::HbGauge {
            d_max,
            residue,
            summary_only,
            output,
        } => {
            let mut report = extraprime::heathbrown_gauge(d_max, residue);
            if summary_only {
                report.table.clear();
            }
            emit(&report, &output)
        }
        Command::Zerosum {
            pool,
            modulus,
            h_min,
            h_max,
            count,
            disjoint,
            seed,
            output,
        } => {
            let pool = inputs::pool(&pool, &modulus)?;
            let request = ZeroSumRequest {
                h_min,
                h_max,
                target_count: count,
                disjoint,
                search: SearchConfig {
                    seed,
                    ..SearchConfig::default()
                },
            };
            let families = zerosum::find_zero_sum_sets(&pool, &modulus, &request).map_err(invalid)?;
            let families: Vec<_> = families.into_values().collect();
            emit(&families, &output)
        }
        Command::Davenport {
            cyclic,
            residue,
            limit,
            output,
        } => {
            let group = match (cyclic, residue) {
                (Some(c), None) => GroupSpec::cyclic(&inputs::list(&c, "order")?),
                (None, Some(m)) => GroupSpec::Residue { modulus: m },
                _ => return Err(invalid("give exactly one of --cyclic or --residue")),
            };
            let report = zerosum::davenport_report(&group, limit).map_err(invalid)?;
            emit(&report, &output)
        }
        Command::AgpCheck {
            cyclic,
            r,
            t,
            trials,
            seed,
            output,
        } => {
            let group = GroupSpec::cyclic(&inputs::list(&cyclic, "order")?);
            let report = zerosum::agp_count_check(&group, r, t, trials, seed).map_err(invalid)?;
            emit(&report, &output)?;
            if report.violations > 0 {
                return Err(CliError::Verification(format!("{} trials fell below the bound", report.violations)));
            }
            Ok(())
        }
        Command::Assemble {
            family,
            g,
            h,
            extra,
            modulus,
            class,
            output,
        } => {
            let families = inputs::families(&family)?;
            let family = match h {
                Some(h) => families.iter().find(|f| f.h == h),
                None => families.iter().find(|f| f.len() >= g),
            }
            .ok_or_else(|| invalid(format!("no family with at least {g} sets")))?;
            if family.len() < g || g == 0 {
                return Err(invalid(format!("family h = {} has {} sets; g = {g}", family.h, family.len())));
            }
            let extra = extra.map(|p| inputs::extra_prime(&p)).transpose()?;
            let m = modulus.unwrap_or_else(|| family.modulus.clone());
            let cert = assemble::assemble_carmichael(&family.sets[..g], extra.as_ref(), &m).map_err(|e| match e {
                assemble::AssembleError::Korselt { .. } => CliError::Verification(e.to_string()),
                e => invalid(e),
            })?;
            emit(&cert, &output)?;
            if !class.matches(cert.factor_count) {
                return Err(CliError::Verification(format!(
                    "factor count {} is not in class {class}",
                    cert.factor_count
                )));
            }
            Ok(())
        }
        Command::Verify { factors, output } => {
            let factors: Vec<Natural> = inputs::list(&factors, "factor")?;
            let report = assemble::verify_korselt(&factors).map_err(invalid)?;
            emit(&report, &output)?;
            if !report.passed {
                let reasons: Vec<String> = report.failures.iter().map(ToString::to_string).collect();
                return Err(CliError::Verification(reasons.join("; ")));
            }
            Ok(())
        }
        Command::Chernick { k_max, output } => {
            if k_max == 0 {
                return Err(invalid("k_max must be >= 1"));
            }
            emit(&assemble::chernick_search(k_max), &output)
        }
        Command::Pipeline(args) => run_pipeline(args),
        Command::Report { path, json } => {
            let summary = pipeline::report(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            if json {
                emit(&summary, &Output { out: None })?;
            } else {
                print!("{summary}");
            }
            if summary.skipped > 0 {
                return Err(CliError::Verification(format!("{} malformed records skipped", summary.skipped)));
            }
            Ok(())
        }
    }
}

fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(invalid)?
        }
        None => PipelineConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $arg:expr),* $(,)?) => {
            $(if let Some(v) = $arg.clone() { config.$field = v.into(); })*
        };
    }
    set!(
        y <- args.y,
        theta <- args.theta,
        count_class <- args.class,
        seed <- args.seed,
        k_min <- args.k_min,
        k_max <- args.k_max,
        target_count <- args.count,
    );
    if let Some(v) = args.k1_max {
        config.k1_max = Some(v);
    }
    if let Some(v) = args.h_min {
        config.h_min = v;
    }
    if let Some(v) = args.h_max {
        config.h_max = Some(v);
    }
    if let Some(m) = &args.modulus {
        config.modulus = Some(m.clone());
    }
    if let Some(pool) = &args.pool {
        config.pool = Some(inputs::list(pool, "prime")?);
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    config.validate().map_err(invalid)?;
    Ok(config)
}

fn run_pipeline(args: PipelineArgs) -> Result<(), CliError> {
    let config = pipeline_config(&args)?;
    let mut sink = match (&config.output, args.resume) {
        (Some(path), true) => RecordSink::resume(path, &config),
        (Some(path), false) => RecordSink::create(path, &config),
        (None, true) => return Err(invalid("--resume needs an output path")),
        (None, false) => Ok(RecordSink::in_memory(&config)),
    }
    .map_err(invalid)?;
    let result = pipeline::run_pipeline(&config, &mut sink);
    if config.output.is_none() {
        for record in sink.records() {
            println!("{}", serde_json::to_string(record).map_err(invalid)?);
        }
    }
    match result {
        Ok(outcome) => {
            eprintln!("{} certificate(s)", outcome.certificates.len());
            Ok(())
        }
        Err(PipelineError::Stage(failure)) => Err(CliError::Stage(
            serde_json::to_string(&failure).map_err(invalid)?,
        )),
        Err(e @ PipelineError::Config(_)) => Err(invalid(e)),
        Err(e @ PipelineError::Io(_)) => Err(CliError::Stage(e.to_string())),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Invalid(msg) | CliError::Stage(msg) | CliError::Verification(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
