//! Command-line front end: loads a TOML run configuration, solves the
//! requested instance, and emits machine-readable artifacts.
//!
//! Exit codes: 0 on success, 1 for invalid configuration, 2 for numeric
//! failures (an undefined flip, a degenerate transform, a learning-cost
//! violation, or a failing verification row).

mod config;
mod outputs;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use categorize::analysis::diagnose;
use categorize::schooling::{
    censorship_threshold, censorship_threshold_sweep, solve_school, verify_ic,
};
use categorize::solver::{flip_problem, solve};
use categorize::valuation::sender_value_all;
use categorize::Error;

use config::{Mode, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    /// For construction-time failures, where any library error means the
    /// configuration described an invalid object.
    fn config_from(e: Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite { .. }
            | Error::DegenerateTransform { .. }
            | Error::FlipUndefined { .. }
            | Error::ConditionViolated { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "categorize",
    about = "Optimal monotone categorization of a quality interval",
    version
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the mode from the configuration file.
    #[arg(long)]
    mode: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(mode) = cli.mode.as_deref() {
        cfg.mode = mode.parse().map_err(CliError::Config)?;
    }
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cfg.output.dir)
        .map_err(|e| CliError::Config(format!("cannot create output dir: {e}")))?;
    match cfg.mode {
        Mode::Solve | Mode::Diagnose | Mode::Flip => run_solve(&cfg),
        Mode::School => run_school(&cfg),
        Mode::Sweep => run_sweep(&cfg),
        Mode::Verify => verify::run(&cfg),
    }
}

fn run_solve(cfg: &RunConfig) -> Result<u8, CliError> {
    let (s, r) = cfg.instance()?;
    let m = cfg.grids.solver_m;
    if cfg.mode == Mode::Flip {
        // The flip must be well-defined in this mode; the report then
        // carries the coverage/overlap block.
        flip_problem(&s, &r).map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    let (curve, cat) = solve(&s, &r, m)?;
    let values = sender_value_all(&cat, &s, &r)?;
    let diagnostics = diagnose(&s, &r, m, &cfg.diagnose.intervals)?;
    let report = outputs::Report::instance(cfg, &cat, values, diagnostics, None);
    outputs::write_all(cfg, &report, &curve, &cat, &s, &r)?;
    Ok(0)
}

fn run_school(cfg: &RunConfig) -> Result<u8, CliError> {
    let school = cfg.school_config()?;
    let m = cfg.grids.solver_m;
    let sol = solve_school(&school, m)?;
    let values = sender_value_all(&sol.categorization, &sol.induced, school.r())?;
    let diagnostics = diagnose(&sol.induced, school.r(), m, &cfg.diagnose.intervals)?;
    let ic_worst = verify_ic(
        &sol.learning,
        &sol.categorization,
        &school,
        10_000,
        cfg.seed,
    );
    let school_block = outputs::SchoolReport {
        payoff: sol.payoff,
        constant: sol.constant,
        intrinsic_learning: school.intrinsic_learning(),
        a_tilde: censorship_threshold(&sol.categorization),
        learning_start: sol.learning.start(),
        learning_jumps: sol.learning.jumps(),
        ic_worst_violation: ic_worst,
    };
    let (curve, _) = solve(&sol.induced, school.r(), m)?;
    let report = outputs::Report::instance(
        cfg,
        &sol.categorization,
        values,
        diagnostics,
        Some(school_block),
    );
    outputs::write_all(
        cfg,
        &report,
        &curve,
        &sol.categorization,
        &sol.induced,
        school.r(),
    )?;
    Ok(0)
}

fn run_sweep(cfg: &RunConfig) -> Result<u8, CliError> {
    let sweep = cfg.sweep_config()?;
    let rows = censorship_threshold_sweep(
        cfg.grids.prior_n,
        cfg.grids.solver_m,
        &sweep.gammas,
        &sweep.lambdas,
    )?;
    outputs::write_sweep_csv(&cfg.output.dir.join("sweep.csv"), &rows)?;
    Ok(0)
}
