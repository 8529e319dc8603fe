//! Command-line pipeline: read records, group, solve, expand the plan,
//! verify it, and write the manifest and distribution report.
//!
//! Exit codes: 0 success, 2 input/format error, 3 infeasible
//! configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::Error;
use crate::io::{read_records, write_manifest};
use crate::model::{group_records, ObjectiveConfig};
use crate::plan::{expand_plan, verify_plan};
use crate::report::{write_report, DistributionReport, ReportFormat};
use crate::seeds::derive_seed;
use crate::solver::{solve, SolverMode, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Local,
    Anneal,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormatArg {
    Text,
    Csv,
}

/// Balance a multi-label dataset by planning per-record augmentations.
#[derive(Debug, Parser)]
#[command(name = "aubalance", version)]
pub struct Args {
    /// Record CSV: header `record_id,<class_1>,...,<class_K>`, cells 0/1.
    #[arg(long)]
    pub input: PathBuf,

    /// Weight on the growth-variance penalty.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// Upper bound factor: counts may grow to floor(max-factor * base).
    #[arg(long = "max-factor", default_value_t = 10.0)]
    pub max_factor: f64,

    #[arg(long, value_enum, default_value_t = SolverArg::Local)]
    pub solver: SolverArg,

    /// Root seed; solver and plan randomness both derive from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 8)]
    pub restarts: u32,

    /// Objective-evaluation budget per solver restart.
    #[arg(long = "max-iters", default_value_t = 10_000)]
    pub max_iters: u64,

    /// Write the JSON-lines augmentation manifest here.
    #[arg(long = "plan-out")]
    pub plan_out: Option<PathBuf>,

    /// Write the distribution report here instead of stdout.
    #[arg(long = "report-out")]
    pub report_out: Option<PathBuf>,

    #[arg(long = "report-format", value_enum, default_value_t = ReportFormatArg::Text)]
    pub report_format: ReportFormatArg,

    /// Extension beyond the balancing method: cap the total record count
    /// (base plus augmented). Off by default.
    #[arg(long)]
    pub budget: Option<u64>,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::Format(_) => 2,
        Error::Infeasible(_) | Error::Domain(_) | Error::SearchSpace(_) => 3,
        _ => 1,
    }
}

pub fn run(args: &Args) -> i32 {
    match run_inner(args) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn run_inner(args: &Args) -> crate::error::Result<()> {
    let table = read_records(&args.input)?;
    let config = ObjectiveConfig::new(args.lambda, args.max_factor).map_err(|e| match e {
        Error::Domain(msg) => Error::Infeasible(msg),
        other => other,
    })?;
    let problem = group_records(&table, config)?;

    if let Some(b) = args.budget {
        let base_total: u64 = problem.base_counts().iter().sum();
        if b < base_total {
            return Err(Error::Infeasible(format!(
                "--budget {b} is below the input record total {base_total}"
            )));
        }
    }

    let settings = SolverSettings {
        seed: derive_seed(args.seed, "solver"),
        restarts: args.restarts,
        max_iterations: args.max_iters,
        step_schedule: None,
        mode: match args.solver {
            SolverArg::Local => SolverMode::LocalSearch,
            SolverArg::Anneal => SolverMode::Annealing,
            SolverArg::Brute => SolverMode::BruteForce,
        },
        budget: args.budget,
    };
    if settings.restarts == 0 {
        return Err(Error::Infeasible("--restarts must be positive".into()));
    }
    let solution = solve(&problem, &settings)?;

    let plan = expand_plan(&table, &problem, &solution, derive_seed(args.seed, "plan"))?;
    let verification = verify_plan(&plan, &table, &problem);
    if !verification.passed() {
        for check in &verification.checks {
            if !check.passed {
                eprintln!("verification failed [{}]: {}", check.name, check.detail);
            }
        }
        return Err(Error::Consistency("plan verification failed".into()));
    }
    if let Some(path) = &args.plan_out {
        write_manifest(&plan, path)?;
    }

    let report = DistributionReport::from_solution(table.class_names(), &problem, &solution)?;
    let format = match args.report_format {
        ReportFormatArg::Text => ReportFormat::Text,
        ReportFormatArg::Csv => ReportFormat::Csv,
    };
    match &args.report_out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_report(&report, &mut w, format)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write_report(&report, &mut w, format)?;
        }
    }
    Ok(())
}
