//! `malab`: run certificate suites against one model and write a report.
//!
//! Exit status is 0 when every suite passes, 1 when any check fails and
//! 2 on usage errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use malab::run::{run, RunConfig, Tolerances, DEFAULT_SEED};
use malab::LabError;

#[derive(Parser, Debug)]
#[command(name = "malab", version, about = "Numerical certificates for Monge-Ampere exhaustions")]
struct Args {
    /// euclidean(n), sphere(n), rproj(n) or cproj(1).
    #[arg(long)]
    model: String,

    /// algebra, lemma33, structure, psh, ma, foliation, deformation, catalog.
    /// Repeatable; defaults to every suite that applies to the model.
    #[arg(long = "suite")]
    suites: Vec<String>,

    /// Sample count per suite.
    #[arg(long)]
    samples: Option<usize>,

    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,

    /// Integrator step.
    #[arg(long, default_value_t = 0.01)]
    dt: f64,

    /// Tolerance override KEY=VALUE, repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tol: Vec<String>,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Exhaustion profile for the ma suite: tau, sqrt_tau or log_tau.
    #[arg(long)]
    ma_kind: Option<String>,

    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Tab-separated eigenvalue spectra.
    #[arg(long)]
    export_spectra: Option<PathBuf>,

    /// Tab-separated leaf traces.
    #[arg(long)]
    export_traces: Option<PathBuf>,

    /// Tab-separated deformation tensor samples.
    #[arg(long)]
    export_phi: Option<PathBuf>,
}

fn write_rows(path: &Path, rows: &[String]) -> io::Result<()> {
    let mut text = rows.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(path, text)
}

fn execute(args: Args) -> Result<bool, LabError> {
    let mut tolerances = Tolerances::load()?;
    for spec in &args.tol {
        tolerances.apply_override(spec)?;
    }
    let config = RunConfig {
        model: args.model,
        suites: args.suites,
        samples: args.samples,
        h: args.h,
        dt: args.dt,
        seed: args.seed,
        ma_kind: args.ma_kind,
        tolerances,
    };
    let start = Instant::now();
    let report = run(&config)?;
    log::info!("{} finished in {:.2?}", config.model, start.elapsed());

    let io_err = |p: &Path, e: io::Error| LabError::Usage(format!("cannot write {}: {e}", p.display()));
    let text = report.render();
    match &args.out {
        Some(p) => fs::write(p, &text).map_err(|e| io_err(p, e))?,
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| io_err(Path::new("stdout"), e))?,
    }
    for (path, rows) in [
        (&args.export_spectra, report.spectra()),
        (&args.export_traces, report.traces()),
        (&args.export_phi, report.phi()),
    ] {
        if let Some(p) = path {
            write_rows(p, &rows).map_err(|e| io_err(p, e))?;
        }
    }
    for suite in report.suites.iter().filter(|s| !s.pass()) {
        log::warn!("suite {} failed", suite.name);
    }
    Ok(report.pass())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("malab: {e}");
            ExitCode::from(2)
        }
    }
}
