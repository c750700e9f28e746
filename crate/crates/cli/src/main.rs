//! Batch driver for the interface-problem experiments.
//!
//! Each experiment writes `<experiment>_<problem>.csv` (header plus one row
//! per grid cell) and `<experiment>_<problem>.json` (row count and fitted
//! slopes) into the output directory.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use sgfem_core::experiments::{
    run_angle, run_conditioning, run_convergence, run_properties, run_proximity, run_solver, slopes_by_scheme,
    ExperimentConfig, ProximitySweep, Record, TraceRecord,
};

use config::Options;

#[derive(Parser)]
#[command(name = "sgfem", version, about = "GFEM/SGFEM interface-problem experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretization error against h.
    Convergence(Options),
    /// Condition numbers of A, A11 and A22.
    Conditioning(Options),
    /// Smallest angle between FEM and enrichment subspaces.
    Angle(Options),
    /// Conditioning and angle as the interface approaches mesh lines.
    Proximity(Options),
    /// Iterative solves with direct verification and error estimates.
    Solver(Options),
    /// Structural invariants over the grid.
    Properties(Options),
    /// Convergence, conditioning and angle (plus solver and properties in 2-D).
    All(Options),
}

#[derive(Serialize)]
struct Summary {
    experiment: String,
    problem: String,
    dimension: usize,
    rows: usize,
    csv: String,
    slopes: Vec<SlopeEntry>,
    failures: usize,
}

#[derive(Serialize)]
struct SlopeEntry {
    scheme: String,
    quantity: String,
    slope: Option<f64>,
}

fn write_csv<R: Record>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(R::header())?;
    for r in rows {
        w.write_record(r.row())?;
    }
    w.flush()?;
    Ok(())
}

struct Output<'a> {
    dir: PathBuf,
    cfg: &'a ExperimentConfig,
}

impl Output<'_> {
    fn emit<R: Record>(&self, experiment: &str, rows: &[R], slopes: Vec<SlopeEntry>, failures: usize) -> Result<()> {
        let stem = format!("{experiment}_{}", self.cfg.problem.name());
        let csv_path = self.dir.join(format!("{stem}.csv"));
        write_csv(&csv_path, rows)?;
        let summary = Summary {
            experiment: experiment.into(),
            problem: self.cfg.problem.name().into(),
            dimension: self.cfg.dimension(),
            rows: rows.len(),
            csv: csv_path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            slopes,
            failures,
        };
        let json = serde_json::to_string_pretty(&summary)?;
        fs::write(self.dir.join(format!("{stem}.json")), json + "\n")?;
        println!("{experiment}: {} rows -> {}", rows.len(), csv_path.display());
        Ok(())
    }
}

fn slopes<'a>(quantity: &str, pts: impl IntoIterator<Item = (&'a str, f64, f64)>) -> Vec<SlopeEntry> {
    slopes_by_scheme(pts)
        .into_iter()
        .map(|(scheme, slope)| SlopeEntry { scheme, quantity: quantity.into(), slope })
        .collect()
}

fn convergence(out: &Output) -> Result<()> {
    let rows = run_convergence(out.cfg)?;
    let s = slopes("relative_epsilon_h", rows.iter().map(|r| (r.scheme.as_str(), r.h, r.relative)));
    out.emit("convergence", &rows, s, 0)
}

fn conditioning(out: &Output) -> Result<()> {
    let rows = run_conditioning(out.cfg)?;
    let mut s = slopes("kappa_A", rows.iter().map(|r| (r.scheme.as_str(), r.h, r.kappa_a)));
    s.extend(slopes("kappa_A22", rows.iter().filter_map(|r| r.kappa_a22.map(|k| (r.scheme.as_str(), r.h, k)))));
    out.emit("conditioning", &rows, s, 0)
}

fn angle(out: &Output) -> Result<()> {
    let rows = run_angle(out.cfg)?;
    out.emit("angle", &rows, Vec::new(), 0)
}

fn proximity(out: &Output) -> Result<()> {
    let rows = run_proximity(out.cfg, &ProximitySweep::default())?;
    out.emit("proximity", &rows, Vec::new(), 0)
}

fn solver(out: &Output) -> Result<()> {
    let rows = run_solver(out.cfg)?;
    let failures = rows.iter().filter(|r| !r.converged).count();
    let trace: Vec<TraceRecord> = rows
        .iter()
        .flat_map(|r| r.trace.iter().map(|&o| TraceRecord { scheme: r.scheme.clone(), m: r.m, outer: o }))
        .collect();
    write_csv(&out.dir.join(format!("solver_trace_{}.csv", out.cfg.problem.name())), &trace)?;
    out.emit("solver", &rows, Vec::new(), failures)?;
    if failures > 0 {
        anyhow::bail!("{failures} solver run(s) did not reach the stopping tolerance");
    }
    Ok(())
}

fn properties(out: &Output) -> Result<()> {
    let rows = run_properties(out.cfg)?;
    let failures = rows.iter().filter(|r| !r.pass).count();
    out.emit("properties", &rows, Vec::new(), failures)?;
    if failures > 0 {
        anyhow::bail!("{failures} property check(s) failed");
    }
    Ok(())
}

type Run = fn(&Output) -> Result<()>;

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (opts, runs): (Options, Vec<Run>) = match cli.command {
        Command::Convergence(o) => (o, vec![convergence]),
        Command::Conditioning(o) => (o, vec![conditioning]),
        Command::Angle(o) => (o, vec![angle]),
        Command::Proximity(o) => (o, vec![proximity]),
        Command::Solver(o) => (o, vec![solver]),
        Command::Properties(o) => (o, vec![properties]),
        Command::All(o) => (o, Vec::new()),
    };
    let resolved = opts.resolve()?;
    let runs = if !runs.is_empty() {
        runs
    } else if resolved.config.dimension() == 1 {
        vec![convergence as Run, conditioning, angle]
    } else {
        vec![convergence as Run, conditioning, angle, solver, properties]
    };
    fs::create_dir_all(&resolved.out).with_context(|| format!("creating {}", resolved.out.display()))?;
    let out = Output { dir: resolved.out, cfg: &resolved.config };
    for run in runs {
        run(&out)?;
    }
    Ok(())
}
