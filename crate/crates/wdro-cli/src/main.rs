//! `wdro` — worst-case expected loss over Wasserstein balls from the
//! command line. Exit codes: 0 success, 2 config, 3 domain, 4 unbounded,
//! 5 kink, 6 no-root. Errors print to stderr as `error.category` and
//! `error.message` lines; wall-clock goes to stderr so report files stay
//! byte-stable.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use wdro::error::{Error, Result};

mod config;
mod ingest;
mod report;
mod run;

use config::{ExpVal, Overrides, Sub};

#[derive(Parser)]
#[command(
    name = "wdro",
    version,
    about = "Worst-case expected loss over Wasserstein balls: exact duals, displacement \
             oracles, closed-form penalties, bounds, and robust discrete choice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact worst case: multiplier dual at finite order, per-ball enumeration at order "inf"
    WorstCase(CommonArgs),
    /// Primal displacement search, reported against the exact worst case
    Oracle(CommonArgs),
    /// Order-1 dual against the closed-form penalty objective
    EquivalenceCheck(CommonArgs),
    /// Gradient-penalty sandwich around the exact worst case
    Bounds(CommonArgs),
    /// Shrinking-radius gap curves, one CSV per seed
    Asymptotics(CommonArgs),
    /// Robust choice probabilities, threshold radius, and attained value
    Choice(CommonArgs),
    /// Projected-subgradient fit of the regularized objective
    Fit(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment config; the flags below override file values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Ball radius
    #[arg(long)]
    alpha: Option<f64>,
    /// Transport order: a number >= 1 or "inf"
    #[arg(long)]
    p: Option<String>,
    /// Ground-norm exponent: a number >= 1 or "inf"
    #[arg(long)]
    q: Option<String>,
    /// Seed for synthetic data (and the fit iteration)
    #[arg(long)]
    seed: Option<u64>,
    /// Synthetic sample size
    #[arg(long)]
    n: Option<usize>,
    /// Dataset CSV; replaces any synthetic source in the file
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Report file; stdout when absent
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Directory for curve CSV files (asymptotics)
    #[arg(long, value_name = "DIR")]
    curve_dir: Option<PathBuf>,
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                Error::Config(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<()> {
    let (sub, args) = match &cli.command {
        Command::WorstCase(a) => (Sub::WorstCase, a),
        Command::Oracle(a) => (Sub::Oracle, a),
        Command::EquivalenceCheck(a) => (Sub::EquivalenceCheck, a),
        Command::Bounds(a) => (Sub::Bounds, a),
        Command::Asymptotics(a) => (Sub::Asymptotics, a),
        Command::Choice(a) => (Sub::Choice, a),
        Command::Fit(a) => (Sub::Fit, a),
    };
    let ov = Overrides {
        alpha: args.alpha,
        p: args.p.as_deref().map(ExpVal::parse_flag).transpose()?,
        q: args.q.as_deref().map(ExpVal::parse_flag).transpose()?,
        seed: args.seed,
        n: args.n,
        data: args.data.clone(),
        report: args.report.clone(),
        curve_dir: args.curve_dir.clone(),
    };
    let resolved = config::load(args.config.as_deref(), sub, &ov)?;
    let artifacts = run::run(&resolved)?;
    for (path, text) in &artifacts.curves {
        write_file(path, text)?;
    }
    match &resolved.report_path {
        Some(path) => write_file(path, &artifacts.report)?,
        None => print!("{}", artifacts.report),
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e.category() {
        "config" => 2,
        "domain" => 3,
        "unbounded" => 4,
        "kink" => 5,
        "no-root" => 6,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match execute(&cli) {
        Ok(()) => {
            eprintln!("wall_clock_seconds = {:.3}", started.elapsed().as_secs_f64());
            0
        }
        Err(e) => {
            eprintln!("error.category = {}", e.category());
            eprintln!("error.message = {e}");
            exit_code(&e)
        }
    };
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
