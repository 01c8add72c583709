// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::ad::AdError;

/// Errors raised by the pulse, device and optimisation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error("invalid grid: N = {n}, T = {t}")]
    InvalidGrid { n: usize, t: f64 },
    #[error("harmonic cutoff {nc} exceeds the maximum {max} for N = {n}")]
    NcTooLarge { nc: usize, max: usize, n: usize },
    #[error("each mode needs at least 2 levels, got {0}")]
    InvalidLevels(usize),
    #[error("mode {0} is driven but has no drive frequency")]
    MissingDriveFrequency(usize),
    #[error("dressed state for label {label} has best overlap {overlap:.3} < 0.5")]
    AmbiguousAssignment { label: usize, overlap: f64 },
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },
    #[error("non-finite cost at iteration {iteration}")]
    NonFiniteCost { iteration: usize },
    #[error("gate time {gate_time} ns does not exceed the speed limit {t_min:.4} ns")]
    SpeedLimitViolated { gate_time: f64, t_min: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
