//! Driver layer over the nematic library: resolves a preset plus optional
//! config-file and flag overrides into a scenario, runs the flow, and writes
//! the artifacts (VTK frames, energy CSV, JSON summary, state file).

pub mod config;
pub mod io;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nematic::flow::StepRecord;

/// CLI-level error, carrying the process exit category: 1 for configuration
/// mistakes, 2 for numerical failures, 3 for IO.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(nematic::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<nematic::Error> for CliError {
    fn from(e: nematic::Error) -> CliError {
        match e {
            // Unwrap the message so the prefix is not printed twice.
            nematic::Error::Config(msg) => CliError::Config(msg),
            e if e.is_config() => CliError::Config(e.to_string()),
            e => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// What a finished run hands back to the caller for the closing summary.
pub struct RunOutcome {
    pub steps: usize,
    pub converged: bool,
    pub final_record: StepRecord,
    pub out_dir: PathBuf,
}

fn frame_path(out: &Path, step: usize) -> PathBuf {
    out.join(format!("frame_{step:06}.vtk"))
}

/// Execute a resolved scenario: advance the flow to its stop rule or step
/// budget, appending one CSV row per sweep and a VTK frame every `stride`
/// sweeps, then write the final frame, the state file, and run.json. On a
/// failed step the artifacts written so far stay on disk.
pub fn run(settings: &config::Settings) -> CliResult<RunOutcome> {
    let out = settings.out_dir.as_path();
    fs::create_dir_all(out)?;
    let mut flow = settings.scenario.build()?;

    let acute = flow.acuteness();
    if !acute.pass() {
        eprintln!(
            "warning: mesh is not weakly acute (min off-diagonal {:.3e}); \
             the discrete energy inequalities are not guaranteed",
            acute.min_offdiag
        );
    }

    let mut csv = io::CsvWriter::create(&out.join("energy.csv"))?;
    let first = flow.initial_record()?;
    csv.row(&first)?;
    io::write_vtk(&frame_path(out, 0), flow.mesh(), flow.s(), flow.director(), 0)?;

    let stop = flow.config().stop_tol_factor * (1.0 + first.total.abs());
    let mut last = first;
    let mut converged = false;
    let mut taken = 0usize;
    while taken < settings.scenario.max_steps {
        let rec = flow.step()?;
        taken += 1;
        csv.row(&rec)?;
        if rec.step % settings.stride == 0 {
            io::write_vtk(&frame_path(out, rec.step), flow.mesh(), flow.s(), flow.director(), rec.step)?;
        }
        last = rec;
        if rec.decrement + rec.t_norm_sq < stop {
            converged = true;
            break;
        }
    }
    csv.finish()?;

    io::write_vtk(&frame_path(out, last.step), flow.mesh(), flow.s(), flow.director(), last.step)?;
    io::write_state(&out.join("state.txt"), flow.mesh().dim, flow.s(), flow.director())?;

    let summary = serde_json::json!({
        "name": settings.scenario.name,
        "mesh": {
            "dim": flow.mesh().dim,
            "nodes": flow.mesh().node_count(),
            "cells": flow.mesh().cell_count(),
        },
        "kappa": settings.scenario.kappa,
        "dt": settings.scenario.dt,
        "potential_enabled": settings.scenario.potential_enabled,
        "steps": last.step,
        "converged": converged,
        "final": {
            "e1": last.e1,
            "e2": last.e2,
            "total": last.total,
            "e1_tilde": last.e1_tilde,
            "c1": last.c1,
        },
        "min_s": last.min_s,
        "acuteness": {
            "min_offdiag": acute.min_offdiag,
            "pass": acute.pass(),
        },
    });
    fs::write(out.join("run.json"), format!("{:#}\n", summary))?;

    Ok(RunOutcome {
        steps: last.step,
        converged,
        final_record: last,
        out_dir: out.to_path_buf(),
    })
}
