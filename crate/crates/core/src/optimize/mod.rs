// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gradient loop over piecewise-constant controls shaped by the constraint nodes.

mod graph;
mod run;
mod step;
mod task;

pub use graph::{CostGraph, Shaper};
pub(crate) use run::{check_blocks, run_loop};
pub use run::{
    cocoa_graph, cocoa_shaper, random_initial_pulses, replay_reports, run_cocoa,
    run_cocoa_from_samples, sample_initial, Method, OptimizationResult, Projection, TracePoint,
};
pub use step::{
    adam_step, sgd_step, stop_check, OptimizerConfig, OptimizerKind, OptimizerState, StopCriteria,
    StopReason,
};
pub use task::{ControlTask, Problem, Target};
