// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qoc_core::io::{summary_csv, write_run, write_text, SummaryRow};
use qoc_core::optimize::{Method, StopReason};
use qoc_core::scenarios::{catalog, run_scenario, run_sweep, Scenario, SweepAxis};

use crate::config::RunConfig;

/// Process exit status of a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    Capped,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Converged => 0,
            Status::Capped => 2,
        }
    }

    fn from_reason(reason: StopReason) -> Self {
        if reason.converged() {
            Status::Converged
        } else {
            Status::Capped
        }
    }
}

pub type CmdResult = Result<Status, String>;

/// Output location for one command, written through a staging directory.
struct Staged {
    target: PathBuf,
    staging: PathBuf,
}

impl Staged {
    fn begin(target: PathBuf, force: bool) -> Result<Self, String> {
        if target.exists() && !force {
            return Err(format!(
                "{} already exists (use --force to overwrite)",
                target.display()
            ));
        }
        let parent = target.parent().unwrap_or(Path::new("."));
        fs::create_dir_all(parent)
            .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)
                .map_err(|e| format!("cannot clear {}: {e}", staging.display()))?;
        }
        fs::create_dir_all(&staging)
            .map_err(|e| format!("cannot create {}: {e}", staging.display()))?;
        Ok(Self { target, staging })
    }

    fn commit(self) -> Result<(), String> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target)
                .map_err(|e| format!("cannot replace {}: {e}", self.target.display()))?;
        }
        fs::rename(&self.staging, &self.target)
            .map_err(|e| format!("cannot move output to {}: {e}", self.target.display()))
    }

    fn abort(self) {
        let _ = fs::remove_dir_all(&self.staging);
    }
}

fn run_into(
    dir: &Path,
    scenario: &Scenario,
    method: Method,
) -> Result<(f64, usize, StopReason), String> {
    let start = Instant::now();
    let result = run_scenario(scenario, method).map_err(|e| e.to_string())?;
    let problem = scenario.problem().map_err(|e| e.to_string())?;
    write_run(
        dir,
        scenario,
        &problem,
        &result,
        start.elapsed().as_secs_f64(),
    )
    .map_err(|e| e.to_string())?;
    Ok((result.infidelity, result.iterations, result.stop_reason))
}

/// Runs one optimisation and writes its artifacts to `<out>/<scenario name>`.
pub fn cmd_run(config: &RunConfig, out: &Path, force: bool) -> CmdResult {
    let staged = Staged::begin(out.join(&config.scenario.name), force)?;
    match run_into(&staged.staging, &config.scenario, config.method) {
        Ok((infidelity, iterations, reason)) => {
            staged.commit()?;
            eprintln!(
                "{} ({}): infidelity {infidelity:.3e} after {iterations} iterations",
                config.scenario.name, config.method
            );
            Ok(Status::from_reason(reason))
        }
        Err(e) => {
            staged.abort();
            Err(e)
        }
    }
}

/// Sweep axis selected on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Nc,
    Time,
    Coupling,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Nc => "nc",
            Axis::Time => "time",
            Axis::Coupling => "coupling",
        }
    }

    fn default_values(self) -> Vec<f64> {
        match self {
            Axis::Nc => (1..=8).map(f64::from).collect(),
            Axis::Time => (25..=36).map(f64::from).collect(),
            Axis::Coupling => vec![1.0, 25.4, 100.0],
        }
    }

    fn sweep(self, values: &[f64]) -> Result<SweepAxis, String> {
        Ok(match self {
            Axis::Nc => SweepAxis::Nc(
                values
                    .iter()
                    .map(|&v| {
                        if v >= 0.0 && v.fract() == 0.0 {
                            Ok(v as usize)
                        } else {
                            Err(format!("sweep value {v} is not a harmonic count"))
                        }
                    })
                    .collect::<Result<_, _>>()?,
            ),
            Axis::Time => SweepAxis::Time(values.to_vec()),
            Axis::Coupling => SweepAxis::Coupling(values.to_vec()),
        })
    }
}

fn sweep_values(config: &RunConfig, axis: Axis) -> Vec<f64> {
    if let Some(v) = &config.sweep_values {
        return v.clone();
    }
    if config.scenario.sweep.name() == axis.name() {
        return config.scenario.sweep.values();
    }
    axis.default_values()
}

/// Runs every sweep point into `<out>/<scenario name>-<axis>/<axis>-<value>` plus `summary.csv`.
pub fn cmd_sweep(
    config: &RunConfig,
    axis: Axis,
    out: &Path,
    force: bool,
    workers: usize,
) -> CmdResult {
    let values = sweep_values(config, axis);
    let base = Scenario {
        sweep: axis.sweep(&values)?,
        ..config.scenario.clone()
    };
    base.sweep_points().map_err(|e| e.to_string())?;
    let staged = Staged::begin(
        out.join(format!("{}-{}", config.scenario.name, axis.name())),
        force,
    )?;

    let points = match run_sweep(&base, config.method, workers) {
        Ok(p) => p,
        Err(e) => {
            staged.abort();
            return Err(e.to_string());
        }
    };
    let mut rows = Vec::with_capacity(points.len());
    for point in points {
        let dir = staged
            .staging
            .join(format!("{}-{}", axis.name(), point.value));
        let outcome = point.outcome.map_err(|e| e.to_string()).and_then(|result| {
            let problem = point.scenario.problem().map_err(|e| e.to_string())?;
            write_run(&dir, &point.scenario, &problem, &result, 0.0).map_err(|e| e.to_string())?;
            Ok((result.infidelity, result.iterations, result.stop_reason))
        });
        rows.push(SummaryRow {
            value: point.value,
            outcome,
        });
    }
    if let Err(e) = write_text(
        &staged.staging.join("summary.csv"),
        &summary_csv(axis.name(), &rows),
    ) {
        staged.abort();
        return Err(e.to_string());
    }
    staged.commit()?;

    for row in &rows {
        match &row.outcome {
            Ok((f, _, _)) => eprintln!("{} = {}: infidelity {f:.3e}", axis.name(), row.value),
            Err(e) => eprintln!("{} = {}: error: {e}", axis.name(), row.value),
        }
    }
    if rows.iter().any(|r| r.outcome.is_err()) {
        return Err(format!(
            "{} sweep point(s) failed",
            rows.iter().filter(|r| r.outcome.is_err()).count()
        ));
    }
    let capped = rows
        .iter()
        .any(|r| matches!(r.outcome, Ok((_, _, reason)) if !reason.converged()));
    Ok(if capped {
        Status::Capped
    } else {
        Status::Converged
    })
}

/// Lists the built-in scenarios, one per line.
pub fn cmd_catalog() -> String {
    let mut out = String::new();
    for s in catalog() {
        out.push_str(&format!(
            "{:<18} T = {:>5} ns  N = {:>3}  N_c = {}  sweep = {:<8}  {}\n",
            s.name,
            s.gate_time,
            s.slices,
            s.nc,
            s.sweep.name(),
            s.description
        ));
    }
    out
}
