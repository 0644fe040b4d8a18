//! Command-line surface. The binary only parses arguments and calls [`execute`].

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::graph::{certificate, load_edge_list, GraphError};
use crate::scenario::{
    compute_metrics, export_csv, export_plots, load_scenario, preset, read_csv, run, sweep, RunResult,
    RunStatus, Scenario, ScenarioError, Tolerances,
};
use crate::verify;

/// Exit status for usage errors.
pub const EXIT_USAGE: i32 = 64;
/// Exit status for runtime failures (I/O, parse, validation).
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "ftform", version, about = "Finite-time leader estimation and fault-tolerant formation control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate presets or scenario files and write trace.csv, metrics.txt and plots.
    Run(RunArgs),
    /// Print H, pi and lambda_min(Xi) for an edge-list graph file.
    CertifyGraph {
        file: PathBuf,
    },
    /// Recompute settling metrics from a trace CSV.
    Metrics {
        trace: PathBuf,
        /// Settling tolerance for every error channel.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Render the figure set of a trace CSV.
    Plot {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Run the numeric property suites.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Built-in preset (paper-5a, paper-5b). Repeatable with --sweep.
    #[arg(long)]
    pub preset: Vec<String>,
    /// Scenario file. Repeatable with --sweep.
    #[arg(long)]
    pub scenario: Vec<PathBuf>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Output directory; with several scenarios each gets a subdirectory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
    /// Accepted and ignored: every run is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run several scenarios concurrently.
    #[arg(long)]
    pub sweep: bool,
    /// Skip SVG output.
    #[arg(long)]
    pub no_plots: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

/// Resolve the scenarios of a `run` invocation, flags applied last.
pub fn resolve_scenarios(args: &RunArgs) -> Result<Vec<Scenario>, CliError> {
    let count = args.preset.len() + args.scenario.len();
    if count == 0 {
        return Err(CliError::Usage("run needs --preset NAME or --scenario FILE".into()));
    }
    if count > 1 && !args.sweep {
        return Err(CliError::Usage("several scenarios given; pass --sweep to run them together".into()));
    }
    let mut out = Vec::with_capacity(count);
    for name in &args.preset {
        out.push(preset(name)?);
    }
    for path in &args.scenario {
        out.push(load_scenario(path)?);
    }
    for sc in &mut out {
        if let Some(t) = args.t_end {
            *sc = sc.clone().with_t_end(t);
        }
        if let Some(h) = args.step {
            *sc = sc.clone().with_step(h);
        }
        sc.validate()?;
    }
    Ok(out)
}

fn guard_overwrite(paths: &[PathBuf], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(ScenarioError::Exists(p.display().to_string()).into()),
        None => Ok(()),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.display().to_string(), source }
}

/// Write trace.csv, metrics.txt and (optionally) the plots of one run into `dir`.
pub fn write_outputs(result: &RunResult, dir: &Path, force: bool, plots: bool) -> Result<Vec<PathBuf>, CliError> {
    let csv = dir.join("trace.csv");
    let metrics = dir.join("metrics.txt");
    guard_overwrite(&[csv.clone(), metrics.clone()], force)?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    export_csv(&result.trace, &csv)?;
    let mut text = result.metrics.summary();
    if let Some(d) = &result.divergence {
        text.push_str(&format!("{d}\n"));
    }
    std::fs::write(&metrics, text).map_err(io_err(&metrics))?;
    let mut files = vec![csv, metrics];
    if plots {
        files.extend(export_plots(&result.trace, dir)?);
    }
    Ok(files)
}

/// Worst status across runs: diverged beats inconclusive beats converged.
pub fn combined_status(statuses: &[RunStatus]) -> RunStatus {
    if statuses.contains(&RunStatus::Diverged) {
        RunStatus::Diverged
    } else if statuses.contains(&RunStatus::Inconclusive) {
        RunStatus::Inconclusive
    } else {
        RunStatus::Converged
    }
}

fn run_command(args: &RunArgs, w: &mut dyn Write) -> Result<i32, CliError> {
    let scenarios = resolve_scenarios(args)?;
    let results: Vec<Result<RunResult, ScenarioError>> =
        if scenarios.len() == 1 { vec![run(&scenarios[0])] } else { sweep(&scenarios) };
    let mut statuses = Vec::new();
    for (sc, res) in scenarios.iter().zip(results) {
        let res = res?;
        let dir = if scenarios.len() == 1 { args.out.clone() } else { args.out.join(&sc.name) };
        write_outputs(&res, &dir, args.force, !args.no_plots)?;
        writeln!(w, "{}: {} -> {}", sc.name, res.status, dir.display())?;
        if let Some(d) = &res.divergence {
            writeln!(w, "  {d}")?;
        }
        write!(w, "{}", res.metrics.summary())?;
        statuses.push(res.status);
    }
    Ok(combined_status(&statuses).exit_code())
}

fn matrix_rows(w: &mut dyn Write, m: &nalgebra::DMatrix<f64>) -> std::io::Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{:>10.6}", v + 0.0)).collect();
        writeln!(w, "  [{}]", row.join(" "))?;
    }
    Ok(())
}

/// Text report for `certify-graph`.
pub fn certify_graph_report(path: &Path, w: &mut dyn Write) -> Result<(), CliError> {
    let g = load_edge_list(path)?;
    let c = certificate(&g)?;
    writeln!(w, "H =")?;
    matrix_rows(w, &c.h)?;
    let pi: Vec<String> = c.pi.iter().map(|v| format!("{v:.6}")).collect();
    writeln!(w, "pi = ({})", pi.join(", "))?;
    writeln!(w, "lambda_min(Xi) = {:.6}", c.lambda_min_xi)?;
    Ok(())
}

fn metrics_command(trace: &Path, tol: Option<f64>, w: &mut dyn Write) -> Result<i32, CliError> {
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let tr = read_csv(trace)?;
    let tolerances = tol.map_or_else(Tolerances::default, Tolerances::uniform);
    let m = compute_metrics(&tr, &tolerances);
    write!(w, "{}", m.summary())?;
    Ok(m.status().exit_code())
}

fn plot_command(trace: &Path, out: &Path, force: bool, w: &mut dyn Write) -> Result<i32, CliError> {
    let tr = read_csv(trace)?;
    if !force && out.exists() && std::fs::read_dir(out).map_err(io_err(out))?.next().is_some() {
        return Err(ScenarioError::Exists(out.display().to_string()).into());
    }
    for f in export_plots(&tr, out)? {
        writeln!(w, "{}", f.display())?;
    }
    Ok(0)
}

fn verify_command(seed: u64, w: &mut dyn Write) -> Result<i32, CliError> {
    let reports = verify::run_all(seed);
    for r in &reports {
        writeln!(w, "{r}")?;
    }
    Ok(if reports.iter().all(|r| r.passed()) { 0 } else { EXIT_FAILURE })
}

/// Execute a parsed command, writing human-readable output to `w`; returns the exit code.
pub fn execute(cli: &Cli, w: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Run(args) => run_command(args, w),
        Command::CertifyGraph { file } => certify_graph_report(file, w).map(|_| 0),
        Command::Metrics { trace, tol } => metrics_command(trace, *tol, w),
        Command::Plot { trace, out, force } => plot_command(trace, out, *force, w),
        Command::Verify { seed } => verify_command(*seed, w),
    }
}

/// Full entry point over an argument list, including the program name.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
