// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Result artifacts: JSON for structured data, CSV for traces and spectra.
//!
//! Amplitudes are written in MHz and frequencies in GHz (cyclic).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fourier::dft_real;
use crate::optimize::{Method, OptimizationResult, Problem, StopReason};
use crate::pulse::{FourierPulse, Harmonic, PwcSequence};
use crate::quantum::propagators;
use crate::scenarios::Scenario;
use crate::units::{mhz, to_ghz, to_mhz};
use crate::{Error, Result};

/// One drive's reported waveform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    pub mode: usize,
    pub frequency_ghz: f64,
    /// Spacing of the harmonics, `1/T`.
    pub base_frequency_ghz: f64,
    pub a0_mhz: f64,
    pub amplitudes_mhz: Vec<f64>,
    pub phases: Vec<f64>,
    /// The propagated slice values.
    pub samples_mhz: Vec<f64>,
}

/// Contents of `pulse.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseFile {
    pub method: Method,
    pub gate_time_ns: f64,
    pub slices: usize,
    pub drives: Vec<DrivePulse>,
    /// Fitted single-qubit rotation angles, for the CNOT family.
    pub theta: Option<[f64; 6]>,
}

impl PulseFile {
    pub fn new(problem: &Problem, result: &OptimizationResult) -> Self {
        let drives = problem
            .model
            .drives
            .iter()
            .zip(&result.reports)
            .zip(&result.pulses)
            .map(|((drive, report), pulse)| DrivePulse {
                mode: drive.mode,
                frequency_ghz: to_ghz(drive.frequency),
                base_frequency_ghz: 1.0 / problem.task.gate_time,
                a0_mhz: to_mhz(report.a0),
                amplitudes_mhz: report
                    .harmonics
                    .iter()
                    .map(|h| to_mhz(h.amplitude))
                    .collect(),
                phases: report.harmonics.iter().map(|h| h.phase).collect(),
                samples_mhz: pulse.values.iter().map(|&v| to_mhz(v)).collect(),
            })
            .collect();
        Self {
            method: result.method,
            gate_time_ns: problem.task.gate_time,
            slices: problem.task.n,
            drives,
            theta: result.theta,
        }
    }

    /// Harmonic reports in internal units.
    pub fn fourier_pulses(&self) -> Vec<FourierPulse> {
        self.drives
            .iter()
            .map(|d| FourierPulse {
                a0: mhz(d.a0_mhz),
                harmonics: d
                    .amplitudes_mhz
                    .iter()
                    .zip(&d.phases)
                    .map(|(&a, &phase)| Harmonic {
                        amplitude: mhz(a),
                        phase,
                    })
                    .collect(),
                gate_time: self.gate_time_ns,
            })
            .collect()
    }

    /// Slice values in internal units.
    pub fn sequences(&self) -> Result<Vec<PwcSequence>> {
        let dt = self.gate_time_ns / self.slices as f64;
        self.drives
            .iter()
            .map(|d| PwcSequence::new(d.samples_mhz.iter().map(|&v| mhz(v)).collect(), dt))
            .collect()
    }
}

/// Contents of `meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: Method,
    pub seed: Option<u64>,
    pub scenario: Scenario,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub infidelity: f64,
    pub wall_time_s: f64,
    pub version: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn trace_csv(result: &OptimizationResult) -> String {
    let mut out = String::from("iteration,infidelity,best,grad_norm\n");
    for p in &result.trace {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.iteration, p.infidelity, p.best, p.grad_norm
        );
    }
    out
}

/// `drive,index,frequency_ghz,magnitude,phase` for every bin of every propagated pulse.
pub fn spectrum_csv(result: &OptimizationResult) -> String {
    let mut out = String::from("drive,index,frequency_ghz,magnitude,phase\n");
    for (j, pulse) in result.pulses.iter().enumerate() {
        let duration = pulse.duration();
        for (m, x) in dft_real(&pulse.values).iter().enumerate() {
            let _ = writeln!(
                out,
                "{j},{m},{},{},{}",
                m as f64 / duration,
                x.norm(),
                x.arg()
            );
        }
    }
    out
}

/// Dressed-state populations along the gate, one block per initial computational state.
///
/// Columns: `time_ns,initial,p00,p01,p10,p11,leakage`.
pub fn populations_csv(problem: &Problem, pulses: &[PwcSequence]) -> Result<String> {
    let steps = propagators(&problem.frame, pulses)?;
    let dt = problem.task.dt();
    let sub = &problem.subspace;
    let labels = ["00", "01", "10", "11"];
    let mut out = String::from("time_ns,initial,p00,p01,p10,p11,leakage\n");
    for (i, label) in labels.iter().enumerate().take(sub.dim()) {
        let start = sub.state(i);
        for (k, u) in steps.iter().enumerate() {
            let psi = u.dot(&start);
            let pops: Vec<f64> = (0..sub.dim())
                .map(|j| {
                    let amp: num_complex::Complex64 = sub
                        .basis
                        .column(j)
                        .iter()
                        .zip(psi.column(0))
                        .map(|(b, p)| b.conj() * p)
                        .sum();
                    amp.norm_sqr()
                })
                .collect();
            let leak = 1.0 - pops.iter().sum::<f64>();
            let _ = write!(out, "{},{label}", k as f64 * dt);
            for p in &pops {
                let _ = write!(out, ",{p}");
            }
            let _ = writeln!(out, ",{}", leak.max(0.0));
        }
    }
    Ok(out)
}

/// Writes `pulse.json`, `trace.csv`, `spectrum.csv`, `populations.csv` and `meta.json` into `dir`.
pub fn write_run(
    dir: &Path,
    scenario: &Scenario,
    problem: &Problem,
    result: &OptimizationResult,
    wall_time_s: f64,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("pulse.json"), &PulseFile::new(problem, result))?;
    write_text(&dir.join("trace.csv"), &trace_csv(result))?;
    write_text(&dir.join("spectrum.csv"), &spectrum_csv(result))?;
    write_text(
        &dir.join("populations.csv"),
        &populations_csv(problem, &result.pulses)?,
    )?;
    let meta = RunMeta {
        method: result.method,
        seed: scenario.seed(),
        scenario: scenario.clone(),
        stop_reason: result.stop_reason,
        iterations: result.iterations,
        infidelity: result.infidelity,
        wall_time_s,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&dir.join("meta.json"), &meta)
}

/// One row of a sweep summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub outcome: std::result::Result<(f64, usize, StopReason), String>,
}

/// `value,best_infidelity,iterations,stop_reason,error`.
pub fn summary_csv(axis: &str, rows: &[SummaryRow]) -> String {
    let mut out = format!("{axis},best_infidelity,iterations,stop_reason,error\n");
    for row in rows {
        match &row.outcome {
            Ok((f, iterations, reason)) => {
                let reason = serde_json::to_value(reason)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default();
                let _ = writeln!(out, "{},{f},{iterations},{reason},", row.value);
            }
            Err(e) => {
                let _ = writeln!(out, "{},,,,\"{}\"", row.value, e.replace('"', "'"));
            }
        }
    }
    out
}
