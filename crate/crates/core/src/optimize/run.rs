// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{CostGraph, Shaper};
use super::step::{stop_check, OptimizerConfig, OptimizerState, StopCriteria, StopReason};
use super::task::{Problem, Target};
use crate::ad::{Tape, Var};
use crate::constraint::{record_band_limit, record_window};
use crate::linalg::CMat;
use crate::pulse::{extract_fourier_report, sample, FourierPulse, Harmonic, PwcSequence};
use crate::quantum::{cnot_target, evolve, infidelity};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cocoa,
    Grape,
    Crab,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Cocoa => "cocoa",
            Method::Grape => "grape",
            Method::Crab => "crab",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub infidelity: f64,
    pub best: f64,
    pub grad_norm: f64,
}

/// Outcome of one optimisation, reported at the best iterate.
#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub method: Method,
    /// Optimised parameters per drive (raw control values, or coefficients for CRAB).
    pub parameters: Vec<Vec<f64>>,
    /// Waveforms actually propagated, one per drive.
    pub pulses: Vec<PwcSequence>,
    /// Harmonic reports of `pulses`.
    pub reports: Vec<FourierPulse>,
    pub theta: Option<[f64; 6]>,
    pub trace: Vec<TracePoint>,
    pub stop_reason: StopReason,
    pub iterations: usize,
    /// Infidelity of the reported pulses.
    pub infidelity: f64,
    pub propagator: CMat,
}

impl OptimizationResult {
    pub fn fidelity(&self) -> f64 {
        1.0 - self.infidelity
    }
}

fn flatten(blocks: &[Vec<f64>]) -> Vec<f64> {
    blocks.iter().flatten().copied().collect()
}

fn unflatten(flat: &[f64], like: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(like.len());
    let mut offset = 0;
    for b in like {
        out.push(flat[offset..offset + b.len()].to_vec());
        offset += b.len();
    }
    out
}

/// Projection applied to parameter blocks after every step (and to the start point).
pub type Projection<'a> = dyn Fn(&mut [Vec<f64>]) + 'a;

/// Iterates evaluate, record, stop-check, step until a criterion fires.
pub(crate) fn run_loop(
    problem: &Problem,
    graph: &mut CostGraph,
    method: Method,
    opt: OptimizerConfig,
    stop: &StopCriteria,
    projection: Option<&Projection<'_>>,
    report_nc: usize,
) -> Result<OptimizationResult> {
    let mut params = graph.params();
    if let Some(project) = projection {
        project(&mut params[..problem.drive_count()]);
        graph.set_params(&params)?;
    }
    let mut flat = flatten(&params);
    let mut state = OptimizerState::new(opt, flat.len());
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut snapshot = None;

    let reason = loop {
        let iteration = trace.len() + 1;
        let f = graph.infidelity();
        if !f.is_finite() {
            return Err(Error::NonFiniteCost { iteration });
        }
        let grads = flatten(&graph.gradient()?);
        let grad_norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        if f < best {
            best = f;
            snapshot = Some((
                params.clone(),
                graph.shaped_pulses(),
                graph.theta(),
                graph.propagator().clone(),
            ));
        }
        trace.push(TracePoint {
            iteration,
            infidelity: f,
            best,
            grad_norm,
        });
        if let Some(reason) = stop_check(f, grad_norm, iteration, stop) {
            break reason;
        }
        state.apply(&mut flat, &grads)?;
        params = unflatten(&flat, &params);
        if let Some(project) = projection {
            project(&mut params[..problem.drive_count()]);
            flat = flatten(&params);
        }
        graph.set_params(&params)?;
    };

    let (parameters, shaped, theta, propagator) = snapshot.expect("at least one evaluation");
    let dt = problem.task.dt();
    let pulses = shaped
        .into_iter()
        .map(|v| PwcSequence::new(v, dt))
        .collect::<Result<Vec<_>>>()?;
    let reports = pulses
        .iter()
        .map(|p| extract_fourier_report(p, report_nc))
        .collect::<Result<Vec<_>>>()?;
    let pulse_blocks = problem.drive_count();
    Ok(OptimizationResult {
        method,
        parameters: parameters[..pulse_blocks].to_vec(),
        pulses,
        reports,
        theta,
        iterations: trace.len(),
        trace,
        stop_reason: reason,
        infidelity: best,
        propagator,
    })
}

/// Window (when enabled) followed by the band-limit projection.
pub fn cocoa_shaper(problem: &Problem) -> impl Fn(&mut Tape, Var) -> Result<Var> + '_ {
    move |tape: &mut Tape, x: Var| {
        let task = &problem.task;
        let y = if task.constrain {
            record_window(tape, x, &task.window)?
        } else {
            x
        };
        record_band_limit(tape, y, task.nc)
    }
}

/// Records the COCOA cost for raw control values `raw` (one block per drive).
pub fn cocoa_graph(problem: &Problem, raw: Vec<Vec<f64>>) -> Result<CostGraph> {
    let shaper = cocoa_shaper(problem);
    CostGraph::build(problem, raw, &shaper as &Shaper<'_>)
}

/// Samples each initial pulse on the task grid.
pub fn sample_initial(problem: &Problem, init: &[FourierPulse]) -> Result<Vec<Vec<f64>>> {
    if init.len() != problem.drive_count() {
        return Err(Error::LengthMismatch {
            what: "initial pulses vs drives",
            left: init.len(),
            right: problem.drive_count(),
        });
    }
    init.iter()
        .map(|p| Ok(sample(p, problem.task.n, problem.task.gate_time)?.values))
        .collect()
}

/// Optimises the raw control values through window, band limit and propagation.
pub fn run_cocoa(
    problem: &Problem,
    init: &[FourierPulse],
    opt: OptimizerConfig,
    stop: &StopCriteria,
) -> Result<OptimizationResult> {
    run_cocoa_from_samples(problem, sample_initial(problem, init)?, opt, stop)
}

/// As [`run_cocoa`], starting from raw control values already on the task grid.
pub fn run_cocoa_from_samples(
    problem: &Problem,
    raw: Vec<Vec<f64>>,
    opt: OptimizerConfig,
    stop: &StopCriteria,
) -> Result<OptimizationResult> {
    check_blocks(problem, &raw)?;
    let mut graph = cocoa_graph(problem, raw)?;
    run_loop(
        problem,
        &mut graph,
        Method::Cocoa,
        opt,
        stop,
        None,
        problem.task.nc,
    )
}

/// Checks one block of `N` values per drive.
pub(crate) fn check_blocks(problem: &Problem, raw: &[Vec<f64>]) -> Result<()> {
    if raw.len() != problem.drive_count() {
        return Err(Error::LengthMismatch {
            what: "pulse blocks vs drives",
            left: raw.len(),
            right: problem.drive_count(),
        });
    }
    for block in raw {
        if block.len() != problem.task.n {
            return Err(Error::LengthMismatch {
                what: "pulse samples vs slices",
                left: block.len(),
                right: problem.task.n,
            });
        }
    }
    Ok(())
}

/// Random harmonic pulses: `a0`, `A_n` uniform in `[-amplitude, amplitude]`, `phi_n` uniform in `[0, 2 pi)`.
pub fn random_initial_pulses(
    seed: u64,
    drives: usize,
    harmonics: usize,
    amplitude: f64,
    gate_time: f64,
) -> Vec<FourierPulse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..drives)
        .map(|_| {
            let a0 = rng.random_range(-amplitude..=amplitude);
            let amps: Vec<f64> = (0..harmonics)
                .map(|_| rng.random_range(-amplitude..=amplitude))
                .collect();
            let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..TAU)).collect();
            FourierPulse {
                a0,
                harmonics: amps
                    .into_iter()
                    .zip(phases)
                    .map(|(amplitude, phase)| Harmonic { amplitude, phase })
                    .collect(),
                gate_time,
            }
        })
        .collect()
}

/// Infidelity of the reported pulses, re-sampled and propagated without a tape.
pub fn replay_reports(problem: &Problem, result: &OptimizationResult) -> Result<f64> {
    let pulses = result
        .reports
        .iter()
        .map(|r| sample(r, problem.task.n, problem.task.gate_time))
        .collect::<Result<Vec<_>>>()?;
    let u = evolve(&problem.frame, &pulses)?;
    let target = match (&problem.task.target, result.theta) {
        (Target::Fixed(t), _) => t.clone(),
        (Target::CnotFamily { .. }, Some(theta)) => cnot_target(&theta),
        (Target::CnotFamily { initial_theta }, None) => cnot_target(initial_theta),
    };
    Ok(infidelity(&u, &target, &problem.gate_frame))
}
