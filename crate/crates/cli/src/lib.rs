//! Commands behind the `dowave` binary.
//!
//! Exit codes: 0 success, 1 failed verification, 2 configuration error,
//! 3 runtime failure.

pub mod config;
pub mod expr;
pub mod output;
pub mod verify;

use std::fs;
use std::path::Path;
use std::time::Instant;

use dowave::analysis::{error_norms, run_study, StudyOptions};
use dowave::model::Discretization;
use dowave::stepper::Solver;

use crate::config::{check_memory, ConfigError};
use crate::output::{field_csv, Parameters, RunSummary};
use crate::verify::Scale;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Verify,
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Verify => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))
}

fn prepare_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("creating {}: {e}", out.display())))
}

/// Runs one configuration and writes `field.csv` and `summary.json` to `out`.
pub fn solve(config: &Path, out: &Path) -> Result<RunSummary, Failure> {
    let job = config::load(config)?.solve_job()?;
    let res = job.resolution;
    check_memory("this run", res, res.history_bytes(), job.memory_budget)?;
    // geometric problems (domain, data) are configuration errors
    let disc = Discretization::new(&job.spec, res).map_err(|e| Failure::Config(e.to_string()))?;
    job.spec.validate(&disc).map_err(|e| Failure::Config(e.to_string()))?;
    prepare_out(out)?;

    let start = Instant::now();
    let mut solver = Solver::new(&job.spec, &disc).map_err(runtime)?;
    while !solver.is_finished() {
        solver.step().map_err(runtime)?;
    }
    let wall = start.elapsed().as_secs_f64();

    let exact = job.spec.exact_field(&disc, disc.t_final());
    let norms = match &exact {
        Some(e) => Some(error_norms(solver.current(), e, &disc).map_err(runtime)?),
        None => None,
    };
    let mut summary = RunSummary {
        case: job.spec.name.clone(),
        parameters: Parameters::of(&disc),
        mu: solver.mu(),
        err_inf: None,
        err_l2: None,
        wall_seconds: wall,
        threads: rayon::current_num_threads(),
        version: env!("CARGO_PKG_VERSION"),
    };
    summary.set_norms(norms);

    if job.output.field {
        let csv = field_csv(&disc, solver.current(), exact.as_ref()).map_err(runtime)?;
        write(&out.join("field.csv"), &csv)?;
    }
    if job.output.summary {
        let json = serde_json::to_string_pretty(&summary).map_err(runtime)?;
        write(&out.join("summary.json"), &json)?;
    }
    Ok(summary)
}

/// Runs a refinement study, writes `report.json` and `report.csv`, and
/// prints the table to standard output.
pub fn study(config: &Path, out: &Path) -> Result<(), Failure> {
    let job = config::load(config)?.study_job()?;
    let rows = &job.schedule.rows;
    let worst = rows.iter().max_by_key(|r| r.history_bytes()).copied().expect("schedule is non-empty");
    check_memory(&format!("schedule `{}`", job.schedule.name), worst, worst.history_bytes(), job.memory_budget)?;
    for r in rows {
        Discretization::new(&job.spec, *r).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if job.spec.exact.is_none() {
        return Err(Failure::Config(format!("key `case`: `{}` has no exact solution to study", job.spec.name)));
    }
    prepare_out(out)?;

    let opts = StudyOptions { parallel: job.parallel, memory_budget: job.memory_budget };
    let report = run_study(&job.spec, &job.schedule, opts);
    if job.output.report_json {
        write(&out.join("report.json"), &serde_json::to_string_pretty(&report).map_err(runtime)?)?;
    }
    if job.output.report_csv {
        write(&out.join("report.csv"), &report.to_csv())?;
    }
    if job.output.table {
        print!("{}", report.to_table());
    }
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter_map(|r| {
            r.failure.as_ref().map(|f| format!("M1={} N={} K={}: {f}", r.resolution.m1, r.resolution.n, r.resolution.k))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} row(s) failed: {}", failed.len(), failed.join("; "))))
    }
}

/// Prints one line per check; fails if any check fails.
pub fn verify(scale: Scale) -> Result<(), Failure> {
    let checks = verify::run_checks(scale);
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}
