mod config;
mod exit;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapbound::{
    alpha_for_instance, estimate_zero_set, extragradient, fit_exponent, gap_descent, sample_cloud,
    verify_error_bound, verify_lojasiewicz, Alpha, BoundReport, BoxRegion, DescentParams, SampleCloud, Verdict,
    ViInstance, ZeroSetConfig, ZeroSetEstimate,
};
use serde::Serialize;

use config::{require, ExperimentConfig};
use exit::{CliError, CliResult};
use io::{parse_box, parse_point_list, parse_points_csv, parse_vector, read_text, to_json, write_atomic};

const DEFAULT_COUNT: usize = 200;
const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Parser)]
#[command(name = "gapbound", version, about = "Gap functions and error bounds for polynomial variational inequalities")]
struct Cli {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate psi, the argmax set, Clarke generators and the stationarity residual at a point.
    Eval(EvalArgs),
    /// Print the error-bound exponents for an instance.
    Exponent(InstanceArgs),
    /// Check the error bound c*dist(x, Z) <= psi(x)^alpha on a point cloud.
    VerifyBound(VerifyArgs),
    /// Check the gradient inequality near a reference point.
    VerifyLoja(LojaArgs),
    /// Run a solver and write its trace.
    Solve(SolveArgs),
    /// Fit the exponent relating dist(x, Z) to psi(x).
    Fit(VerifyArgs),
    /// Estimate the zero set of psi inside a box.
    Zeroset(ZeroArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Override the regularization parameter.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    psi_threshold: Option<f64>,
    #[arg(long)]
    c_floor: Option<f64>,
    #[arg(long)]
    solve_tol: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Point as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
}

#[derive(Args)]
struct SamplingArgs {
    /// Sampling box `lo1,lo2:hi1,hi2`.
    #[arg(long = "box", allow_hyphen_values = true)]
    region: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Exponent as `p/q` or a decimal; defaults to the instance's certified exponent.
    #[arg(long)]
    alpha: Option<String>,
    /// CSV of points to use instead of sampling.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Treat the points file as an ordered sequence.
    #[arg(long)]
    sequence: bool,
    /// Box searched for zeros of psi (defaults to the sampling box).
    #[arg(long, allow_hyphen_values = true)]
    zero_box: Option<String>,
    /// Known zeros `x1,x2;y1,y2` used instead of a search.
    #[arg(long, allow_hyphen_values = true)]
    zero_points: Option<String>,
    /// Solver starts for the zero search.
    #[arg(long)]
    starts: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct LojaArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, allow_hyphen_values = true)]
    xbar: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Extragradient,
    Descent,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Extragradient step; defaults to a Lipschitz-based estimate.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ZeroArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long = "box", allow_hyphen_values = true)]
    region: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
}

fn load_instance(args: &InstanceArgs, cfg: &ExperimentConfig) -> CliResult<ViInstance> {
    let path = require(args.instance.clone(), cfg.instance.clone(), "instance")?;
    let text = read_text(&path)?;
    let mut inst = ViInstance::from_json(&text).map_err(|e| match e {
        gapbound::Error::Parse { line, column, message } => {
            CliError::Parse(format!("{}: line {line}, column {column}: {message}", path.display()))
        }
        other => other.into(),
    })?;
    if let Some(rho) = args.rho.or(cfg.rho) {
        inst = inst.with_rho(rho)?;
    }
    let mut tol = cfg.tolerances.unwrap_or_default();
    if let Some(v) = args.psi_threshold {
        tol.psi_threshold = v;
    }
    if let Some(v) = args.c_floor {
        tol.c_floor = v;
    }
    if let Some(v) = args.solve_tol {
        tol.solve_tol = v;
    }
    Ok(inst.with_tolerances(tol)?)
}

fn vector_arg(flag: &Option<String>, file: &Option<Vec<f64>>, name: &str) -> CliResult<Vec<f64>> {
    match flag {
        Some(text) => parse_vector(text),
        None => require(None, file.clone(), name),
    }
}

fn box_arg(flag: &Option<String>, file: &Option<BoxRegion>) -> CliResult<Option<BoxRegion>> {
    match flag {
        Some(text) => parse_box(text).map(Some),
        None => Ok(file.clone()),
    }
}

fn alpha_arg(flag: &Option<String>, cfg: &ExperimentConfig, inst: &ViInstance) -> CliResult<Alpha> {
    match flag.as_ref().or(cfg.alpha.as_ref()) {
        Some(text) => Alpha::from_str(text).map_err(|e| CliError::Parse(format!("alpha '{text}': {e}"))),
        None => Ok(alpha_for_instance(inst).applicable_alpha().clone()),
    }
}

fn print_json<T: Serialize>(value: &T) {
    use std::io::Write;
    // a closed pipe downstream is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{}", to_json(value));
}

fn write_outputs(report: &BoundReport, out: &OutputArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    if let Some(path) = out.out_csv.as_ref().or(cfg.out_csv.as_ref()) {
        write_atomic(path, &report.to_csv())?;
    }
    if let Some(path) = out.out_json.as_ref().or(cfg.out_json.as_ref()) {
        write_atomic(path, &(to_json(&report.summary()) + "\n"))?;
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let inst = load_instance(&args.inst, cfg)?;
    let x = vector_arg(&args.x, &cfg.x, "x")?;
    let eval = inst.evaluate(&x)?;
    print_json(&eval);
    if eval.residual.is_none() {
        return Err(CliError::Precondition(
            "x lies outside the feasible set; the stationarity residual is undefined".into(),
        ));
    }
    Ok(())
}

fn cmd_exponent(args: &InstanceArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let inst = load_instance(args, cfg)?;
    print_json(&alpha_for_instance(&inst));
    Ok(())
}

fn bounding_region(points: &[Vec<f64>]) -> CliResult<BoxRegion> {
    let first = points
        .first()
        .ok_or_else(|| CliError::Precondition("the points file holds no points".into()))?;
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        if p.len() != lo.len() {
            return Err(CliError::Precondition("points have inconsistent dimensions".into()));
        }
        for i in 0..p.len() {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    Ok(BoxRegion::new(lo, hi)?)
}

/// Builds the cloud, the zero-set estimate and the report shared by
/// `verify-bound` and `fit`.
fn bound_report(args: &VerifyArgs, cfg: &ExperimentConfig) -> CliResult<(ViInstance, BoundReport)> {
    let inst = load_instance(&args.inst, cfg)?;
    let alpha = alpha_arg(&args.alpha, cfg, &inst)?;
    let region = box_arg(&args.sampling.region, &cfg.region)?;
    let seed = args.sampling.seed.or(cfg.seed);
    let cloud = match args.points.as_ref().or(cfg.points.as_ref()) {
        Some(path) => {
            let points = parse_points_csv(&read_text(path)?)?;
            if args.sequence || cfg.sequence.unwrap_or(false) {
                SampleCloud::sequence(points)
            } else {
                let frame = match &region {
                    Some(r) => r.clone(),
                    None => bounding_region(&points)?,
                };
                SampleCloud::compact(frame, points)
            }
        }
        None => {
            let region = require(region.clone(), None, "box")?;
            let seed = require(seed, None, "seed")?;
            let count = args.sampling.count.or(cfg.count).unwrap_or(DEFAULT_COUNT);
            sample_cloud(&inst, &region, count, seed)?
        }
    };
    let zero_points = match &args.zero_points {
        Some(text) => Some(parse_point_list(text)?),
        None => cfg.zero_points.clone(),
    };
    let zero = match zero_points {
        Some(points) => ZeroSetEstimate::new(points, inst.tolerances().psi_threshold),
        None => {
            let zbox = box_arg(&args.zero_box, &cfg.zero_box)?
                .or(region)
                .ok_or_else(|| CliError::Precondition("--zero-box, --box or --zero-points is required".into()))?;
            let zcfg = ZeroSetConfig {
                seed: require(seed, None, "seed")?,
                starts: args.starts.or(cfg.starts).unwrap_or(ZeroSetConfig::default().starts),
                ..ZeroSetConfig::default()
            };
            estimate_zero_set(&inst, &zbox, &zcfg)?
        }
    };
    let report = verify_error_bound(&inst, &cloud, &zero, &alpha)?;
    Ok((inst, report))
}

fn cmd_verify(args: &VerifyArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let (_, report) = bound_report(args, cfg)?;
    write_outputs(&report, &args.out, cfg)?;
    print_json(&report.summary());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.verdict == Verdict::Inconclusive {
        return Err(CliError::Inconclusive("no sampled point has a positive gap value".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitSummary {
    fitted_alpha: f64,
    fitted_c: f64,
    points: usize,
}

fn cmd_fit(args: &VerifyArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let (inst, report) = bound_report(args, cfg)?;
    write_outputs(&report, &args.out, cfg)?;
    let (fitted_alpha, fitted_c) = fit_exponent(&report.rows, inst.tolerances().psi_threshold)?;
    print_json(&FitSummary {
        fitted_alpha,
        fitted_c,
        points: report.rows.len(),
    });
    Ok(())
}

fn cmd_loja(args: &LojaArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let inst = load_instance(&args.inst, cfg)?;
    let xbar = vector_arg(&args.xbar, &cfg.xbar, "xbar")?;
    let epsilon = require(args.epsilon, cfg.epsilon, "epsilon")?;
    let seed = require(args.seed, cfg.seed, "seed")?;
    let count = args.count.or(cfg.count).unwrap_or(DEFAULT_COUNT);
    let alpha = alpha_arg(&args.alpha, cfg, &inst)?;
    let cloud = sample_cloud(&inst, &BoxRegion::around(&xbar, epsilon), count, seed)?.restrict_to_ball(&xbar, epsilon);
    let report = verify_lojasiewicz(&inst, &xbar, epsilon, &cloud, &alpha)?;
    write_outputs(&report, &args.out, cfg)?;
    print_json(&report.summary());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.verdict == Verdict::Inconclusive {
        return Err(CliError::Inconclusive("no sampled point has a nonzero gap difference".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    status: gapbound::TerminalStatus,
    iterations: usize,
    solution: Option<Vec<f64>>,
    psi: f64,
    natural_residual: f64,
}

fn cmd_solve(args: &SolveArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let inst = load_instance(&args.inst, cfg)?;
    let x0 = vector_arg(&args.x0, &cfg.x0, "x0")?;
    let method = match (args.method, cfg.method.as_deref()) {
        (Some(m), _) => m,
        (None, Some(text)) => Method::from_str(text, true).map_err(|_| CliError::Parse(format!("unknown method '{text}'")))?,
        (None, None) => Method::Extragradient,
    };
    let max_iter = args.max_iter.or(cfg.max_iter).unwrap_or(DEFAULT_MAX_ITER);
    let trace = match method {
        Method::Extragradient => extragradient(&inst, &x0, args.step.or(cfg.step), max_iter)?,
        Method::Descent => gap_descent(
            &inst,
            &x0,
            &DescentParams {
                max_iter,
                ..DescentParams::default()
            },
        )?,
    };
    if let Some(path) = args.out_csv.as_ref().or(cfg.out_csv.as_ref()) {
        write_atomic(path, &trace.to_csv())?;
    }
    let last = trace.last();
    print_json(&SolveSummary {
        status: trace.status,
        iterations: last.k,
        solution: trace.solution.clone(),
        psi: last.psi,
        natural_residual: last.natural_residual,
    });
    Ok(())
}

fn cmd_zeroset(args: &ZeroArgs, cfg: &ExperimentConfig) -> CliResult<()> {
    let inst = load_instance(&args.inst, cfg)?;
    let region = require(box_arg(&args.region, &cfg.region)?, None, "box")?;
    let zcfg = ZeroSetConfig {
        seed: require(args.seed, cfg.seed, "seed")?,
        starts: args.starts.or(cfg.starts).unwrap_or(ZeroSetConfig::default().starts),
        ..ZeroSetConfig::default()
    };
    let zero = estimate_zero_set(&inst, &region, &zcfg)?;
    if zero.is_empty() {
        eprintln!("warning: no zero of psi found; distances to it count as 1");
    }
    print_json(&zero);
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(text) = std::env::var("GAPBOUND_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Parse(format!("GAPBOUND_THREADS must be a positive integer, got '{text}'")))?;
    gapbound::configure_threads(threads).map_err(CliError::Precondition)
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let cfg = ExperimentConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Eval(a) => cmd_eval(a, &cfg),
        Command::Exponent(a) => cmd_exponent(a, &cfg),
        Command::VerifyBound(a) => cmd_verify(a, &cfg),
        Command::VerifyLoja(a) => cmd_loja(a, &cfg),
        Command::Solve(a) => cmd_solve(a, &cfg),
        Command::Fit(a) => cmd_fit(a, &cfg),
        Command::Zeroset(a) => cmd_zeroset(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
