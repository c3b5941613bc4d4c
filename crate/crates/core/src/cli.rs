//! Command-line front end: `analyze`, `run`, `moments` and `list`.
//!
//! Each `cmd_*` function returns what the command prints so it can be
//! checked against the library call it wraps. [`main_with_args`] maps
//! errors to exit codes: 0 success, 2 invalid input, 3 numerical
//! singularity, 4 I/O.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::algorithm::Algorithm;
use crate::analysis::analyze;
use crate::error::{Error, Result};
use crate::experiments::{
    build_scenario, builtin_scenarios, f_moment_curve, run_experiment, InterestMode, RunConfig,
    Scenario, SCENARIO_NAMES,
};
use crate::json::{self, FloatStyle};
use crate::problem::ProblemFile;

/// Environment variable naming the default output directory of `run`.
pub const OUT_DIR_ENV: &str = "EMPHATIC_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "emphatic-out";

#[derive(Debug, Parser)]
#[command(name = "emphatic", version, about = "Emphatic TD(λ) policy evaluation on finite MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the expected-update analysis of a task as JSON.
    Analyze {
        /// Built-in scenario name or path to a problem file.
        input: String,
        #[arg(long, default_value = "emphatic")]
        algorithm: String,
    },
    /// Run seeded learners and write CSV plus a JSON manifest.
    Run {
        input: String,
        #[arg(long, default_value = "emphatic")]
        algorithm: String,
        /// Inclusive range `a..b`, comma list, or a single seed.
        #[arg(long, default_value = "1")]
        seeds: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Keep every n-th step in runs.csv.
        #[arg(long, default_value_t = 1)]
        record_every: u64,
        /// Truncate the followon and eligibility traces at this magnitude.
        #[arg(long)]
        bound: Option<f64>,
        /// Output directory [default: $EMPHATIC_OUT_DIR or ./emphatic-out].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print exact followon-trace moments as CSV.
    Moments {
        input: String,
        #[arg(long, default_value = "state-interest")]
        mode: String,
        #[arg(long, default_value_t = 30)]
        tmax: usize,
    },
    /// List the built-in scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
}

/// Resolves a built-in name or a problem-file path.
pub fn load_input(input: &str) -> Result<Scenario> {
    if SCENARIO_NAMES.contains(&input) {
        return build_scenario(input);
    }
    let path = Path::new(input);
    if !path.exists() {
        return Err(Error::UnknownScenario(format!(
            "{input} (not a built-in and no such file; built-ins: {})",
            SCENARIO_NAMES.join(", ")
        )));
    }
    let file = ProblemFile::load(path)?;
    let name = file
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "problem".to_string());
    let mut scenario = Scenario::from_task(&name, file.to_task()?)?;
    if let Some(d) = file.description {
        scenario.description = d;
    }
    Ok(scenario)
}

/// Seeds as `a..b` (inclusive), `a,b,c`, or `a`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Problem(format!("cannot parse seeds `{text}`"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Pretty JSON with every float written to 17 significant digits.
pub fn to_json_17(value: &Value) -> String {
    json::pretty(value, FloatStyle::SignificantDigits17)
}

pub fn cmd_analyze(input: &str, algorithm: &str) -> Result<String> {
    let algorithm: Algorithm = algorithm.parse()?;
    let scenario = load_input(input)?;
    let mut report = analyze(&scenario.task, algorithm)?.to_json();
    report["scenario"] = Value::from(scenario.name);
    Ok(to_json_17(&report) + "\n")
}

#[derive(Clone, Debug)]
pub struct RunArgs {
    pub input: String,
    pub algorithm: String,
    pub seeds: String,
    pub alpha: Option<f64>,
    pub horizon: Option<u64>,
    pub record_every: u64,
    pub bound: Option<f64>,
    pub out: PathBuf,
}

/// Runs the experiment and writes its files; returns a one-line summary per
/// file plus the divergence count.
pub fn cmd_run(args: &RunArgs) -> Result<String> {
    let algorithm: Algorithm = args.algorithm.parse()?;
    let scenario = load_input(&args.input)?;
    let seeds = parse_seeds(&args.seeds)?;
    let defaults = RunConfig::for_scenario(&scenario);
    let cfg = RunConfig {
        alpha: args.alpha.unwrap_or(defaults.alpha),
        horizon: args.horizon.unwrap_or(defaults.horizon),
        bound: args.bound,
        record_every: args.record_every,
        ..defaults
    };
    let result = run_experiment(&scenario, algorithm, &seeds, &cfg)?;
    let written = result.write_to(&args.out)?;
    let diverged = result.runs.iter().filter(|r| r.diverged()).count();
    let mut out = String::new();
    for path in written {
        let _ = writeln!(out, "wrote {}", path.display());
    }
    let _ = writeln!(
        out,
        "{} runs, {} diverged, median final |theta| {:e}",
        result.runs.len(),
        diverged,
        result.median_final_abs()
    );
    Ok(out)
}

/// CSV `t,mean,variance,analytic_mean,analytic_variance`; the analytic
/// columns are empty where no closed form is known.
pub fn cmd_moments(input: &str, mode: &str, t_max: usize) -> Result<String> {
    let mode: InterestMode = mode.parse()?;
    let scenario = load_input(input)?;
    let curve = f_moment_curve(&scenario.task, mode, t_max)?;
    let mut out = String::from("t,mean,variance,analytic_mean,analytic_variance\n");
    for c in curve {
        let _ = write!(out, "{},{:.16e},{:.16e},", c.t, c.mean, c.variance);
        if let Some((m, v)) = scenario.analytic_moment(mode, c.t) {
            let _ = write!(out, "{m:.16e},{v:.16e}");
        } else {
            out.push(',');
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_list(as_json: bool) -> String {
    let scenarios = builtin_scenarios();
    if as_json {
        let items: Vec<Value> = scenarios
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "description": s.description,
                    "origin": s.origin,
                    "states": s.task.num_states(),
                    "actions": s.task.num_actions(),
                    "features": s.task.num_features(),
                    "default_alpha": s.default_alpha,
                    "horizon": s.horizon,
                    "runs": s.runs,
                })
            })
            .collect();
        return serde_json::to_string_pretty(&items).expect("listing serializes") + "\n";
    }
    let width = scenarios.iter().map(|s| s.name.len()).max().unwrap_or(0);
    scenarios
        .iter()
        .map(|s| format!("{:width$}  {} [{}]\n", s.name, s.description, s.origin))
        .collect()
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn dispatch(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Analyze { input, algorithm } => cmd_analyze(&input, &algorithm),
        Command::Run {
            input,
            algorithm,
            seeds,
            alpha,
            horizon,
            record_every,
            bound,
            out,
        } => cmd_run(&RunArgs {
            input,
            algorithm,
            seeds,
            alpha,
            horizon,
            record_every,
            bound,
            out: out.unwrap_or_else(default_out_dir),
        }),
        Command::Moments { input, mode, tmax } => cmd_moments(&input, &mode, tmax),
        Command::List { json } => Ok(cmd_list(json)),
    }
}

/// Parses `args`, runs the command, prints its output or error, and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()) {
                Ok(()) => 0,
                Err(_) => 4,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
