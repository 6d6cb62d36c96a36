//! Command-line interface.
//!
//! Every command echoes its effective configuration as one JSON line on
//! stderr and writes its report to `--out` or stdout. Values come from flags,
//! then from the optional `--config` JSON file, then from built-in defaults.
//! The seed defaults to 0. Replicate `r` uses ChaCha8 stream `(seed, r)`.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 I/O failure,
//! 3 verification failure, 4 enumeration cap exceeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{verify_gap_chain, DEFAULT_SCENARIO_CAP};
use crate::error::{Error, Result};
use crate::experiments::{
    compare_policies, gap_experiment, gen_random_instance, replicate_rng, small_suite, verify_suite,
    CompareOptions, GenSpec, MatroidKind, ObjectiveKind, PolicyKind, TightExample,
};
use crate::format::{instance_to_json, load_instance};
use crate::matroid::{Matroid, MatroidSpec};
use crate::model::Instance;
use crate::policies::{
    evaluate_adaptive_exact, greedy_nonadaptive, optimal_adaptive_exact, optimal_nonadaptive_exact,
    run_myopic, ExpectationMode, Myopic, OutcomeSource,
};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_CAP: i32 = 4;

const DEFAULT_REPLICATES: usize = 100;
const DEFAULT_GAP_REPLICATES: usize = 200;
const DEFAULT_GAP_NS: [usize; 3] = [10, 30, 100];
const DEFAULT_SUITE_COUNT: usize = 540;

#[derive(Parser, Debug)]
#[command(name = "stochsub", version, about = "Stochastic submodular maximization over matroids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance file: `gen tight n=4 [copies=C budget=B]` or
    /// `gen random n=5 support=2 [objective=coverage|concave_sum|table]
    /// [matroid=uniform|partition|explicit] [max_rank=3]`
    Gen(GenArgs),
    /// Simulate policies on an instance and report a CSV row per policy
    Run(RunArgs),
    /// Exact optimal adaptive, optimal non-adaptive, myopic and greedy values as JSON
    Exact(InstanceArgs),
    /// The scenario-LP upper bound and its certificate chain as JSON
    Bound(InstanceArgs),
    /// Scanning policy against the non-adaptive optimum on the tight example, as CSV
    Gap(GapArgs),
    /// Check every guarantee on a generated suite of small instances
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Seed for all randomness [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with defaults for any flag (snake_case keys); flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// `tight` or `random`
    kind: String,
    /// Generator parameters as key=value
    params: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Instance file
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Matroid as inline JSON or a JSON file; overrides the instance's own
    #[arg(long)]
    matroid: Option<String>,
    /// Cap on enumerated realizations and LP scenarios
    #[arg(long)]
    cap_scenarios: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    target: InstanceArgs,
    /// Comma-separated policies: myopic, greedy, continuous_greedy,
    /// optimal_adaptive, optimal_nonadaptive [default: myopic]
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    /// Simulated realizations [default: 100]
    #[arg(long)]
    replicates: Option<usize>,
    /// Continuous greedy samples per step [default: 200]
    #[arg(long)]
    samples: Option<usize>,
    /// Continuous greedy steps T [default: 100]
    #[arg(long)]
    steps: Option<u32>,
    /// Write the myopic run on replicate 0 as JSON lines to this file
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GapArgs {
    /// Comma-separated sizes [default: 10,30,100]
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Replicates per size [default: 200]
    #[arg(long)]
    replicates: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite name; only `small` exists
    #[arg(long)]
    suite: Option<String>,
    /// Number of instances [default: 540]
    #[arg(long)]
    count: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Values a `--config` file may supply.
#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    instance: Option<PathBuf>,
    matroid: Option<Value>,
    cap_scenarios: Option<u64>,
    policy: Option<Vec<String>>,
    replicates: Option<usize>,
    samples: Option<usize>,
    steps: Option<u32>,
    trace: Option<PathBuf>,
    n: Option<Vec<usize>>,
    suite: Option<String>,
    count: Option<usize>,
}

enum Failure {
    Err(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Err(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Err(Error::Io(e))
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Verification(listing)) => {
            eprintln!("{listing}");
            EXIT_VERIFY
        }
        Err(Failure::Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::EnumerationTooLarge { .. } => EXIT_CAP,
        _ => EXIT_USAGE,
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Gap(args) => cmd_gap(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn load_config(common: &CommonArgs) -> Result<FileConfig> {
    match &common.config {
        None => Ok(FileConfig::default()),
        Some(path) => Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?),
    }
}

fn echo<T: Serialize>(command: &str, config: &T) -> Result<()> {
    let mut value = serde_json::to_value(config)?;
    if let Value::Object(map) = &mut value {
        map.insert("command".into(), Value::from(command));
    }
    eprintln!("{}", serde_json::to_string(&value)?);
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct GenConfig<'a> {
    kind: &'a str,
    params: Vec<(String, String)>,
    seed: u64,
    out: Option<PathBuf>,
}

fn cmd_gen(args: GenArgs) -> std::result::Result<(), Failure> {
    let file = load_config(&args.common)?;
    let seed = args.common.seed.or(file.seed).unwrap_or(0);
    let out = args.common.out.clone().or(file.out);
    let params = args
        .params
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::InvalidArgument(format!("generator parameter {p:?} is not key=value")))
        })
        .collect::<Result<Vec<_>>>()?;
    echo(
        "gen",
        &GenConfig {
            kind: &args.kind,
            params: params.clone(),
            seed,
            out: out.clone(),
        },
    )?;
    let get = |key: &str| params.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let number = |key: &str| -> Result<Option<usize>> {
        get(key)
            .map(|v| v.parse().map_err(|_| Error::InvalidArgument(format!("{key}={v} is not a nonnegative integer"))))
            .transpose()
    };
    let allow = |keys: &[&str]| -> Result<()> {
        match params.iter().find(|(k, _)| !keys.contains(&k.as_str())) {
            Some((k, _)) => Err(Error::InvalidArgument(format!(
                "unknown generator parameter {k:?} for {}; expected {}",
                args.kind,
                keys.join(", ")
            ))),
            None => Ok(()),
        }
    };
    let (instance, matroid) = match args.kind.as_str() {
        "tight" => {
            allow(&["n", "copies", "budget"])?;
            let tight = TightExample::new(number("n")?.unwrap_or(4))?;
            let copies = number("copies")?.unwrap_or(tight.copies());
            let budget = number("budget")?.unwrap_or(tight.budget());
            tight.materialize(copies, budget)?
        }
        "random" => {
            allow(&["n", "support", "objective", "matroid", "max_rank"])?;
            let mut spec = GenSpec::new(number("n")?.unwrap_or(5), number("support")?.unwrap_or(2));
            if let Some(v) = get("objective") {
                spec.objective = ObjectiveKind::parse(v)?;
            }
            if let Some(v) = get("matroid") {
                spec.matroid = MatroidKind::parse(v)?;
            }
            if let Some(r) = number("max_rank")? {
                spec.max_rank = r;
            }
            gen_random_instance(&spec, seed)?
        }
        other => {
            return Err(Error::InvalidArgument(format!("unknown generator {other:?}; expected tight or random")).into())
        }
    };
    emit(out.as_deref(), &instance_to_json(&instance, Some(&matroid))?)?;
    Ok(())
}

#[derive(Serialize)]
struct Target {
    instance: PathBuf,
    matroid: Option<Value>,
    cap_scenarios: Option<u64>,
    seed: u64,
    out: Option<PathBuf>,
}

impl Target {
    fn resolve(args: &InstanceArgs, file: &FileConfig) -> Result<Self> {
        let instance = args
            .instance
            .clone()
            .or_else(|| file.instance.clone())
            .ok_or_else(|| Error::InvalidArgument("--instance is required".into()))?;
        let matroid = match &args.matroid {
            Some(text) => Some(parse_matroid_arg(text)?),
            None => file.matroid.clone(),
        };
        Ok(Target {
            instance,
            matroid,
            cap_scenarios: args.cap_scenarios.or(file.cap_scenarios),
            seed: args.common.seed.or(file.seed).unwrap_or(0),
            out: args.common.out.clone().or_else(|| file.out.clone()),
        })
    }

    fn scenario_cap(&self) -> u64 {
        self.cap_scenarios.unwrap_or(DEFAULT_SCENARIO_CAP)
    }

    fn load(&self) -> Result<(Instance, Matroid)> {
        let loaded = load_instance(&self.instance)?;
        let instance = match self.cap_scenarios {
            Some(cap) => loaded.instance.with_cap(cap),
            None => loaded.instance,
        };
        let spec = match &self.matroid {
            Some(value) => Some(matroid_from_value(value)?),
            None => loaded.matroid,
        };
        let spec = spec.ok_or_else(|| {
            Error::InvalidArgument("the instance file has no matroid; pass --matroid".into())
        })?;
        let matroid = Matroid::from_spec(&spec, instance.n())?;
        Ok((instance, matroid))
    }

    fn config_id(&self) -> String {
        self.instance
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".into())
    }
}

/// Inline JSON when the text starts with `{`, otherwise a JSON file path.
fn parse_matroid_arg(text: &str) -> Result<Value> {
    if text.trim_start().starts_with('{') {
        Ok(serde_json::from_str(text)?)
    } else {
        Ok(serde_json::from_str(&std::fs::read_to_string(text)?)?)
    }
}

fn matroid_from_value(value: &Value) -> Result<MatroidSpec> {
    match value {
        Value::String(path) => Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?),
        other => Ok(serde_json::from_value(other.clone())?),
    }
}

#[derive(Serialize)]
struct RunConfig {
    #[serde(flatten)]
    target: Target,
    policy: Vec<String>,
    replicates: usize,
    samples: usize,
    steps: u32,
    trace: Option<PathBuf>,
}

fn cmd_run(args: RunArgs) -> std::result::Result<(), Failure> {
    let file = load_config(&args.target.common)?;
    let defaults = CompareOptions::default();
    let config = RunConfig {
        target: Target::resolve(&args.target, &file)?,
        policy: if args.policy.is_empty() {
            file.policy.clone().unwrap_or_else(|| vec![PolicyKind::Myopic.name().to_string()])
        } else {
            args.policy
        },
        replicates: args.replicates.or(file.replicates).unwrap_or(DEFAULT_REPLICATES),
        samples: args.samples.or(file.samples).unwrap_or(defaults.samples),
        steps: args.steps.or(file.steps).unwrap_or(defaults.steps),
        trace: args.trace.or(file.trace),
    };
    echo("run", &config)?;
    let policies = config
        .policy
        .iter()
        .map(|p| PolicyKind::parse(p))
        .collect::<Result<Vec<_>>>()?;
    let (instance, matroid) = config.target.load()?;
    let seed = config.target.seed;
    let options = CompareOptions {
        mode: ExpectationMode::Exact,
        steps: config.steps,
        samples: config.samples,
    };
    let report = compare_policies(
        &config.target.config_id(),
        &instance,
        &matroid,
        &policies,
        config.replicates,
        seed,
        options,
    )?;
    if let Some(path) = &config.trace {
        let scenario = instance.sample_scenario(&mut replicate_rng(seed, 0));
        let trace = run_myopic(&instance, &matroid, OutcomeSource::Fixed(&scenario))?;
        std::fs::write(path, trace.to_json_lines())?;
    }
    emit(config.target.out.as_deref(), &report.to_csv())?;
    Ok(())
}

fn cmd_exact(args: InstanceArgs) -> std::result::Result<(), Failure> {
    let file = load_config(&args.common)?;
    let target = Target::resolve(&args, &file)?;
    echo("exact", &target)?;
    let (instance, matroid) = target.load()?;
    let (adaptive, tree) = optimal_adaptive_exact(&instance, &matroid)?;
    let opt = optimal_nonadaptive_exact(&instance, &matroid)?;
    let myopic = evaluate_adaptive_exact(&Myopic, &instance, &matroid)?;
    let greedy = greedy_nonadaptive(&instance, &matroid, ExpectationMode::Exact)?;
    let report = json!({
        "optimal_adaptive": adaptive,
        "early_stop_gains": tree.early_stop_gains,
        "optimal_nonadaptive": {
            "value": opt.value,
            "set": opt.set,
            "best_basis_value": opt.best_basis_value,
            "best_basis": opt.best_basis,
        },
        "myopic": {"value": myopic.value, "paths": myopic.paths},
        "greedy": {"value": instance.expected_value(&greedy)?, "set": greedy},
    });
    emit(target.out.as_deref(), &pretty(&report)?)?;
    Ok(())
}

fn cmd_bound(args: InstanceArgs) -> std::result::Result<(), Failure> {
    let file = load_config(&args.common)?;
    let target = Target::resolve(&args, &file)?;
    echo("bound", &target)?;
    let (instance, matroid) = target.load()?;
    let cert = verify_gap_chain(&instance, &matroid, target.scenario_cap())?;
    emit(target.out.as_deref(), &pretty(&cert)?)?;
    if !cert.holds() {
        let listing: Vec<String> = cert
            .failures()
            .iter()
            .map(|l| format!("violated: {} ({} > {}, by {:e})", l.name, l.lhs, l.rhs, l.violation()))
            .collect();
        return Err(Failure::Verification(listing.join("\n")));
    }
    Ok(())
}

#[derive(Serialize)]
struct GapConfig {
    n: Vec<usize>,
    replicates: usize,
    seed: u64,
    out: Option<PathBuf>,
}

fn cmd_gap(args: GapArgs) -> std::result::Result<(), Failure> {
    let file = load_config(&args.common)?;
    let config = GapConfig {
        n: if args.n.is_empty() {
            file.n.clone().unwrap_or_else(|| DEFAULT_GAP_NS.to_vec())
        } else {
            args.n
        },
        replicates: args.replicates.or(file.replicates).unwrap_or(DEFAULT_GAP_REPLICATES),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
        out: args.common.out.or(file.out),
    };
    echo("gap", &config)?;
    let report = gap_experiment(&config.n, config.replicates, config.seed)?;
    emit(config.out.as_deref(), &report.to_csv())?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyConfig {
    suite: String,
    count: usize,
    seed: u64,
    out: Option<PathBuf>,
}

fn cmd_verify(args: VerifyArgs) -> std::result::Result<(), Failure> {
    let file = load_config(&args.common)?;
    let config = VerifyConfig {
        suite: args.suite.or(file.suite).unwrap_or_else(|| "small".into()),
        count: args.count.or(file.count).unwrap_or(DEFAULT_SUITE_COUNT),
        seed: args.common.seed.or(file.seed).unwrap_or(0),
        out: args.common.out.or(file.out),
    };
    echo("verify", &config)?;
    if config.suite != "small" {
        return Err(Error::InvalidArgument(format!("unknown suite {:?}; expected small", config.suite)).into());
    }
    let suite = small_suite(config.seed, config.count)?;
    let report = verify_suite(&suite, config.seed)?;
    emit(config.out.as_deref(), &pretty(&report)?)?;
    if !report.passed() {
        return Err(Failure::Verification(report.failures.join("\n")));
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}
