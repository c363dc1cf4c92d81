use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use proxiter::alternating::neumann_limit;
use proxiter::config::ProblemConfig;
use proxiter::harness::{compare, verify_properties, write_table_file, write_trace_file, PropertyThresholds};
use proxiter::mappings::{paper_example, reflection_example};
use proxiter::schemes::{run, DEFAULT_EPSILON, DEFAULT_RUN_MAX_ITERS, DEFAULT_TOL_RESIDUAL, DEFAULT_WEIGHT};
use proxiter::{Error, Problem, RunOptions, Schedule, SchemeSpec, StopRule};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_UNCONVERGED: u8 = 2;
const EXIT_PROPERTY: u8 = 3;

const PRESETS: [&str; 2] = ["paper-example", "paper-reflection"];
const SCHEMES: [&str; 7] =
    ["picard", "mann", "ishikawa", "proj-mann", "proj-ishikawa", "bp-ishikawa", "bp-proj-ishikawa"];

/// Fixed-point and best-proximity iteration over pairs of convex sets.
#[derive(Parser)]
#[command(name = "proxiter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme and write its trace.
    Run(RunArgs),
    /// Run several schemes from the same start and tabulate them.
    Compare(CompareArgs),
    /// Alternating projections between M and N from w0.
    Vonneumann(NeumannArgs),
    /// Seeded property suites for the projections and the map.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in problem: paper-example or paper-reflection.
    #[arg(long)]
    preset: Option<String>,
    /// Problem file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Weights {
    /// η_n (constant).
    #[arg(long, default_value_t = DEFAULT_WEIGHT)]
    eta: f64,
    /// δ_n (constant).
    #[arg(long, default_value_t = DEFAULT_WEIGHT)]
    delta: f64,
    /// Guard ε: every η_n, δ_n must lie in [ε, 1 − ε].
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct Stopping {
    /// Residual tolerance (gap residual for best-proximity schemes).
    #[arg(long, default_value_t = DEFAULT_TOL_RESIDUAL)]
    tol: f64,
    /// Step-norm tolerance; 0 disables it.
    #[arg(long, default_value_t = 0.0)]
    tol_step: f64,
    #[arg(long, default_value_t = DEFAULT_RUN_MAX_ITERS)]
    max_iters: usize,
    /// Fail instead of warning when the declared map kind fails its check.
    #[arg(long)]
    strict: bool,
    /// Seed for the sampled map-kind check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// One of: picard, mann, ishikawa, proj-mann, proj-ishikawa, bp-ishikawa, bp-proj-ishikawa.
    #[arg(long)]
    scheme: String,
    #[command(flatten)]
    weights: Weights,
    #[command(flatten)]
    stop: Stopping,
    /// Trace CSV destination.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated scheme names.
    #[arg(long, default_value = "picard,mann,ishikawa")]
    schemes: String,
    #[command(flatten)]
    weights: Weights,
    #[command(flatten)]
    stop: Stopping,
    /// Comparison table CSV destination.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NeumannArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = proxiter::alternating::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = proxiter::alternating::DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Count map-hypothesis violations as failures.
    #[arg(long)]
    strict: bool,
}

struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EXIT_USAGE, e.to_string())
    }
}

fn load(source: &Source) -> Result<Problem, Failure> {
    match (&source.preset, &source.config) {
        (Some(name), _) => match name.as_str() {
            "paper-example" => Ok(paper_example()),
            "paper-reflection" => Ok(reflection_example()),
            other => Err(Failure(
                EXIT_USAGE,
                format!("unknown preset {other:?}; valid presets: {}", PRESETS.join(", ")),
            )),
        },
        (None, Some(path)) => Ok(ProblemConfig::load(path)?.build()?),
        (None, None) => Err(Failure(EXIT_USAGE, "one of --preset or --config is required".into())),
    }
}

fn parse_scheme(name: &str, w: &Weights) -> Result<SchemeSpec, Failure> {
    let sched = |v: f64| Schedule::constant(v).with_guard(w.epsilon).map_err(Failure::from);
    let (eta, delta) = (sched(w.eta)?, sched(w.delta)?);
    Ok(match name.trim() {
        "picard" => SchemeSpec::Picard,
        "mann" => SchemeSpec::Mann { eta },
        "ishikawa" => SchemeSpec::Ishikawa { eta, delta },
        "proj-mann" => SchemeSpec::ProjectedMann { eta },
        "proj-ishikawa" => SchemeSpec::ProjectedIshikawa { eta, delta },
        "bp-ishikawa" => SchemeSpec::BpIshikawa { eta, delta },
        "bp-proj-ishikawa" => SchemeSpec::BpProjectedIshikawa { eta, delta },
        other => {
            return Err(Failure(
                EXIT_USAGE,
                format!("unknown scheme {other:?}; valid schemes: {}", SCHEMES.join(", ")),
            ))
        }
    })
}

fn stop_and_options(s: &Stopping) -> Result<(StopRule, RunOptions), Failure> {
    let stop = StopRule::new(s.tol, s.tol_step, s.max_iters)?;
    let opts = RunOptions { strict: s.strict, seed: s.seed, ..RunOptions::default() };
    Ok((stop, opts))
}

fn cmd_run(args: &RunArgs) -> Result<u8, Failure> {
    let problem = load(&args.source)?;
    let scheme = parse_scheme(&args.scheme, &args.weights)?;
    let (stop, opts) = stop_and_options(&args.stop)?;
    let report = run(&problem, &scheme, &stop, &opts)?;
    if let Some(path) = &args.output {
        write_trace_file(&report, path)?;
    }
    let last = report.final_record();
    println!(
        "{}: {} after {} iterations ({}), final residual {:e}, gap residual {:e}, final point {}",
        report.scheme,
        if report.converged { "converged" } else { "not converged" },
        report.iterations,
        report.stop_reason.as_str(),
        last.residual,
        last.gap_residual,
        report.final_point,
    );
    Ok(if report.converged { EXIT_OK } else { EXIT_UNCONVERGED })
}

fn cmd_compare(args: &CompareArgs) -> Result<u8, Failure> {
    let problem = load(&args.source)?;
    let schemes = args
        .schemes
        .split(',')
        .map(|name| parse_scheme(name, &args.weights))
        .collect::<Result<Vec<_>, _>>()?;
    let (stop, opts) = stop_and_options(&args.stop)?;
    let (table, _) = compare(&problem, &schemes, &stop, &opts)?;
    if let Some(path) = &args.output {
        write_table_file(&table, path)?;
    }
    println!("{} (tol {:e})", table.problem_label, table.tol);
    for row in &table.rows {
        println!(
            "  {:<32} {:>6} iterations  converged={:<5}  residual={:e}  rate={}",
            row.scheme_label,
            row.iterations,
            row.converged,
            row.final_residual,
            row.rate_estimate.map_or("-".to_string(), |r| format!("{r:.6}")),
        );
    }
    Ok(if table.all_converged() { EXIT_OK } else { EXIT_UNCONVERGED })
}

fn cmd_vonneumann(args: &NeumannArgs) -> Result<u8, Failure> {
    let problem = load(&args.source)?;
    let pair = neumann_limit(&problem.m, &problem.n, &problem.w0, args.tol, args.max_iters)?;
    println!("w* = {}", pair.w_star);
    println!("z* = {}", pair.z_star);
    println!("gap = {}", pair.gap);
    println!("displacement = {}", pair.displacement);
    println!("iterations = {} ({})", pair.iterations_used, if pair.converged { "converged" } else { "not converged" });
    Ok(if pair.converged { EXIT_OK } else { EXIT_UNCONVERGED })
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let problem = load(&args.source)?;
    let th = PropertyThresholds { strict: args.strict, ..PropertyThresholds::default() };
    let report = verify_properties(&problem.m, &problem.n, Some(&problem.map), args.trials as usize, args.seed, &th)?;
    for suite in &report.suites {
        let status = match (suite.passed(), suite.advisory) {
            (true, _) => "PASS",
            (false, true) => "WARN",
            (false, false) => "FAIL",
        };
        println!(
            "{status} {:<24} checks={:<7} failures={:<6} worst_margin={:e}",
            suite.name, suite.checks, suite.failures, suite.worst_margin
        );
        for w in &suite.witnesses {
            println!("     witness: {w}");
        }
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_PROPERTY })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Vonneumann(a) => cmd_vonneumann(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
