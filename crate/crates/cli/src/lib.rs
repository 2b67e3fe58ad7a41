//! Command-line front end for `orbitstat`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use orbitstat::asymptotics::{constants_for, predict_and_fit, report_json};
use orbitstat::census::{CensusOptions, OrbitCensus};
use orbitstat::distribution::{expected_w_from, joint_census, w_pmf, WeightedAdditive};
use orbitstat::ldp::{tail_report, tail_report_csv, RateFunction};
use orbitstat::sampler::{samples_csv, tv_distance, w_histogram, Sampler};
use orbitstat::systems::{validate_dold, DoldFailureKind, SigmaSource};
use orbitstat::{Error, Real};

pub mod system;

pub const SCHEMA: &str = "orbitstat/1";

#[derive(Parser, Debug)]
#[command(name = "orbitstat", version, about = "Orbit counts, asymptotic constants and decomposition statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Table of σ, P, N, cumulative counts and Mertens sums.
    Census(Common),
    /// Cesàro mean, growth rate and leading constant.
    Constants(Common),
    /// Exact distribution of the number of distinct prime orbits.
    Wdist(Common),
    /// Exact tails against the rate function and Chebyshev bounds.
    Ldp(Common),
    /// Uniform samples of general orbits.
    Sample(Common),
    /// Dold congruences and FAD parameter checks.
    Validate(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// builtin:NAME[,key=value...], table:[...], inline JSON or a JSON file.
    #[arg(long)]
    pub system: String,
    #[arg(long = "X", value_parser = clap::value_parser!(u64).range(1..))]
    pub x: Option<u64>,
    /// Working precision in bits.
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u32).range(64..))]
    pub precision: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long = "epsilon")]
    pub epsilons: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub skip_validate: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub include_empty_orbit: bool,
    /// Comma-separated X values for ratio fits and tail reports.
    #[arg(long, value_delimiter = ',')]
    pub window: Vec<u64>,
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::MalformedSpec(_)
            | Error::NonRealizable(_)
            | Error::InvalidPrimeCount(_)
            | Error::NonIntegralOrbitCount(_)
            | Error::NotCoprime(..)
            | Error::NotPrime(_)
            | Error::OddPrimeOnly(_)
            | Error::InvalidArgument(_)
            | Error::TableTooShort { .. }
            | Error::OutOfRange { .. } => Failure::Validation(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

type Outcome = std::result::Result<String, Failure>;

fn decimal(r: &Real) -> Value {
    json!({"value": r.to_decimal_sig(), "precision_bits": r.precision()})
}

fn rational_json(r: &BigRational, prec: u32) -> Value {
    json!({"exact": r.to_string(), "value": Real::from_ratio(r, prec).to_decimal_sig(), "precision_bits": prec})
}

fn envelope(c: &Common, source: &SigmaSource, command: &str) -> Value {
    json!({"schema": SCHEMA, "command": command, "system": source.describe(), "precision_bits": c.precision})
}

fn require_x(c: &Common) -> std::result::Result<u64, Failure> {
    c.x.ok_or_else(|| Failure::Validation("--X is required for this command".into()))
}

fn dold_check(source: &SigmaSource, x: u64) -> std::result::Result<(), Failure> {
    let n = match source {
        SigmaSource::Table(t) => x.min(t.len() as u64),
        _ => x,
    };
    let report = validate_dold(&source.sigma_table(n)?);
    if let Some(f) = report.first_failure {
        let why = match f.kind {
            DoldFailureKind::NonIntegral => format!("Möbius sum {} is not divisible by {}", f.mobius_sum, f.ell),
            DoldFailureKind::Negative => format!("Möbius sum {} is negative", f.mobius_sum),
        };
        return Err(Failure::Validation(format!("Dold condition fails at ℓ = {}: {why}", f.ell)));
    }
    if let Some(spec) = source.fad() {
        spec.validate()?;
    }
    Ok(())
}

fn census_for(c: &Common, source: &SigmaSource, x: u64) -> std::result::Result<OrbitCensus, Failure> {
    if !c.skip_validate {
        dold_check(source, x)?;
    }
    Ok(OrbitCensus::from_source(source, x, c.precision, CensusOptions::default())?)
}

fn digits(prec: u32) -> usize {
    ((prec as f64 * std::f64::consts::LOG10_2) as usize).clamp(8, 60)
}

fn cmd_census(c: &Common, source: &SigmaSource) -> Outcome {
    let x = require_x(c)?;
    let census = census_for(c, source, x)?;
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(census.to_csv(c.include_empty_orbit, digits(c.precision))?),
        Format::Json => {
            let mut rows = Vec::new();
            let mut cum_n = num_bigint::BigUint::default();
            for n in 0..=x {
                let mut nn = census.total(n)?.clone();
                if n == 0 && !c.include_empty_orbit {
                    nn = Default::default();
                }
                cum_n += &nn;
                let mut row = json!({"n": n, "N": nn.to_string(), "cumN": cum_n.to_string(),
                    "cumP": census.cumulative_primes(n)?.to_string(), "M": decimal(census.mertens(n)?)});
                if n > 0 {
                    row["sigma"] = json!(census.sigma(n)?.to_string());
                    row["P"] = json!(census.prime(n)?.to_string());
                }
                rows.push(row);
            }
            let mut v = envelope(c, source, "census");
            v["X"] = json!(x);
            v["include_empty_orbit"] = json!(c.include_empty_orbit);
            v["rows"] = Value::Array(rows);
            Ok(pretty(&v))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cmd_constants(c: &Common, source: &SigmaSource) -> Outcome {
    if !c.skip_validate {
        dold_check(source, c.x.unwrap_or(64).min(200))?;
    }
    let constants = constants_for(source, c.precision, c.x.unwrap_or(64))?;
    let fit = match c.x {
        Some(x) => {
            let census = OrbitCensus::from_source(source, x, c.precision, CensusOptions::default())?;
            let window = if c.window.is_empty() { vec![(x / 4).max(1), (x / 2).max(1), x] } else { c.window.clone() };
            Some(predict_and_fit(&census, constants.b.value.to_f64(), constants.c_over_gamma, &window)?)
        }
        None => None,
    };
    let mut v = envelope(c, source, "constants");
    v["constants"] = report_json(&constants, fit.as_ref());
    // Flatten B for quick access.
    v["B"] = json!(constants.b.exact.as_ref().map(|e| e.to_string()).unwrap_or_else(|| constants.b.value.to_decimal_sig()));
    Ok(pretty(&v))
}

fn cmd_wdist(c: &Common, source: &SigmaSource) -> Outcome {
    let x = require_x(c)?;
    let census = census_for(c, source, x)?;
    let unit = joint_census(&WeightedAdditive::unit(census.prime_table()), x)?;
    let pmf = w_pmf(&unit, x)?;
    let ew = expected_w_from(&census, &unit, x)?;
    let mut v = envelope(c, source, "wdist");
    let p = pmf.to_json();
    for key in ["X", "values", "masses"] {
        v[key] = p[key].clone();
    }
    v["N"] = json!(pmf.total.to_string());
    v["mean"] = rational_json(&pmf.mean(), c.precision);
    v["variance"] = rational_json(&pmf.variance(), c.precision);
    v["expected_w"] = json!({"from_counts": ew.from_counts.to_string(), "from_pmf": ew.from_pmf.to_string()});
    Ok(pretty(&v))
}

fn cmd_ldp(c: &Common, source: &SigmaSource) -> Outcome {
    let x = require_x(c)?;
    let xs = if c.window.is_empty() { vec![x] } else { c.window.clone() };
    let xmax = xs.iter().copied().max().unwrap_or(x);
    let census = census_for(c, source, xmax)?;
    let constants = constants_for(source, c.precision, xmax)?;
    let eps = if c.epsilons.is_empty() { vec![1.0] } else { c.epsilons.clone() };
    let rows = tail_report(&census, constants.b.value.to_f64(), &xs, &eps, &RateFunction::Poisson)?;
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(tail_report_csv(&rows)),
        Format::Json => {
            let mut v = envelope(c, source, "ldp");
            v["B"] = json!(constants.b.value.to_decimal_sig());
            v["rows"] = rows
                .iter()
                .map(|r| {
                    json!({"X": r.x, "epsilon": format!("{}", r.epsilon), "a": r.a, "tail": r.tail.to_string(),
                        "log_p": format!("{:.12}", r.log_p), "normalized": format!("{:.12}", r.normalized),
                        "rate": format!("{:.12}", r.rate), "chebyshev_bound": r.bound.to_string(),
                        "bound_dominates": r.bound_dominates})
                })
                .collect();
            Ok(pretty(&v))
        }
    }
}

fn cmd_sample(c: &Common, source: &SigmaSource) -> Outcome {
    let x = require_x(c)?;
    let census = census_for(c, source, x)?;
    let sampler = Sampler::new(&census, x)?;
    let draws = sampler.sample_many(c.seed, c.samples, c.threads);
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(samples_csv(&draws)),
        Format::Json => {
            let pmf = w_pmf(&joint_census(&WeightedAdditive::unit(census.prime_table()), x)?, x)?;
            let mut v = envelope(c, source, "sample");
            v["X"] = json!(x);
            v["seed"] = json!(c.seed.to_string());
            v["samples"] = json!(c.samples);
            v["histogram"] = w_histogram(&draws).into_iter().map(|(k, n)| (k.to_string(), json!(n))).collect();
            v["tv_distance"] = json!(format!("{:.6}", tv_distance(&draws, &pmf)));
            Ok(pretty(&v))
        }
    }
}

fn cmd_validate(c: &Common, source: &SigmaSource) -> Outcome {
    let x = c.x.unwrap_or(match source {
        SigmaSource::Table(t) => t.len() as u64,
        _ => 200,
    });
    let report = validate_dold(&source.sigma_table(x)?);
    let mut v = envelope(c, source, "validate");
    v["checked"] = json!(report.checked);
    v["ok"] = json!(report.ok);
    if let Some(f) = &report.first_failure {
        v["first_failure"] = json!({"ell": f.ell, "kind": format!("{:?}", f.kind), "mobius_sum": f.mobius_sum.to_string()});
    }
    if let Some(spec) = source.fad() {
        v["fad_parameters"] = json!(match spec.validate() {
            Ok(()) => "ok".to_string(),
            Err(e) => e.to_string(),
        });
    }
    let text = pretty(&v);
    dold_check(source, x).map(|_| text)
}

/// Parse `args` and run; returns the exit status.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (common, f): (&Common, fn(&Common, &SigmaSource) -> Outcome) = match &cli.command {
        Command::Census(c) => (c, cmd_census),
        Command::Constants(c) => (c, cmd_constants),
        Command::Wdist(c) => (c, cmd_wdist),
        Command::Ldp(c) => (c, cmd_ldp),
        Command::Sample(c) => (c, cmd_sample),
        Command::Validate(c) => (c, cmd_validate),
    };
    let result = system::parse_system(&common.system).map_err(Failure::from).and_then(|s| f(common, &s));
    match result {
        Ok(text) => {
            let written = match &common.out {
                Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string()),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "internal error: writing output: {e}");
                    1
                }
            }
        }
        Err(failure) => {
            let _ = writeln!(stderr, "{failure}");
            failure.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
