// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reference optimisers sharing the COCOA cost, propagation and optimiser.
//!
//! The PWC baseline steps the raw slice values and enforces the bounds by
//! projection after every step. The Fourier baseline steps the coefficients
//! of a truncated cosine/sine expansion and clamps the synthesised waveform.

use std::f64::consts::TAU;
use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ad::{Tape, Var};
use crate::fourier::max_harmonics;
use crate::optimize::{
    check_blocks, run_loop, sample_initial, CostGraph, Method, OptimizationResult, OptimizerConfig,
    Problem, Shaper, StopCriteria,
};
use crate::pulse::{grid_times, FourierPulse};
use crate::{Error, Result};

/// Frequencies of the Fourier baseline's basis, in rad/ns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrabBasis {
    pub frequencies: Vec<f64>,
    /// Seed used to perturb the frequencies, if any.
    pub seed: Option<u64>,
}

impl CrabBasis {
    /// `w_n = 2 pi n / T` for `n = 1..=count`.
    pub fn harmonic(count: usize, gate_time: f64) -> Self {
        Self {
            frequencies: (1..=count).map(|n| TAU * n as f64 / gate_time).collect(),
            seed: None,
        }
    }

    /// `w_n = 2 pi (n + r_n) / T` with `r_n` uniform in `[-1/2, 1/2)`.
    pub fn randomized(count: usize, gate_time: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            frequencies: (1..=count)
                .map(|n| TAU * (n as f64 + rng.random_range(-0.5..0.5)) / gate_time)
                .collect(),
            seed: Some(seed),
        }
    }

    pub fn count(&self) -> usize {
        self.frequencies.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.is_empty() {
            return Err(Error::InvalidConfig(
                "CRAB basis needs at least one frequency".into(),
            ));
        }
        if let Some(w) = self.frequencies.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "CRAB frequency {w} is not finite"
            )));
        }
        Ok(())
    }

    /// Synthesis matrix mapping `[a0, A_1..A_K, B_1..B_K]` to `N` samples:
    /// `s[k] = a0 + sum_n A_n cos(w_n t_k) + B_n sin(w_n t_k)`.
    pub fn synthesis(&self, n: usize, dt: f64) -> Array2<f64> {
        let k = self.count();
        let times = grid_times(n, dt);
        Array2::from_shape_fn((n, 2 * k + 1), |(row, col)| {
            let t = times[row];
            match col {
                0 => 1.0,
                c if c <= k => (self.frequencies[c - 1] * t).cos(),
                c => (self.frequencies[c - k - 1] * t).sin(),
            }
        })
    }

    /// Coefficients reproducing `p` on the basis, assuming matching frequencies.
    ///
    /// Harmonics beyond the basis are dropped; missing ones are zero.
    pub fn coefficients(&self, p: &FourierPulse) -> Vec<f64> {
        let k = self.count();
        let mut out = vec![0.0; 2 * k + 1];
        out[0] = p.a0;
        for (i, h) in p.harmonics.iter().take(k).enumerate() {
            out[1 + i] = h.amplitude * h.phase.cos();
            out[1 + k + i] = -h.amplitude * h.phase.sin();
        }
        out
    }
}

/// Which baseline to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineConfig {
    Grape,
    Crab { basis: CrabBasis },
}

impl BaselineConfig {
    pub fn method(&self) -> Method {
        match self {
            BaselineConfig::Grape => Method::Grape,
            BaselineConfig::Crab { .. } => Method::Crab,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaselineConfig::Grape => Ok(()),
            BaselineConfig::Crab { basis } => basis.validate(),
        }
    }
}

/// Clamps every block to the bounds and zeroes its first and last values.
pub fn grape_projection(lower: f64, upper: f64) -> impl Fn(&mut [Vec<f64>]) {
    move |blocks: &mut [Vec<f64>]| {
        for block in blocks {
            for v in block.iter_mut() {
                *v = v.clamp(lower, upper);
            }
            if let Some(first) = block.first_mut() {
                *first = 0.0_f64.clamp(lower, upper);
            }
            if let Some(last) = block.last_mut() {
                *last = 0.0_f64.clamp(lower, upper);
            }
        }
    }
}

/// Records the cost with the raw values propagated as they are.
pub fn grape_graph(problem: &Problem, raw: Vec<Vec<f64>>) -> Result<CostGraph> {
    let identity = |_: &mut Tape, x: Var| Ok(x);
    CostGraph::build(problem, raw, &identity as &Shaper<'_>)
}

/// Optimises the slice values directly, projecting onto the bounds after each step.
pub fn run_grape_like(
    problem: &Problem,
    init: &[FourierPulse],
    opt: OptimizerConfig,
    stop: &StopCriteria,
) -> Result<OptimizationResult> {
    let raw = sample_initial(problem, init)?;
    check_blocks(problem, &raw)?;
    let mut graph = grape_graph(problem, raw)?;
    let window = &problem.task.window;
    let project = grape_projection(window.lower, window.upper);
    let projection: Option<&crate::optimize::Projection<'_>> = if problem.task.constrain {
        Some(&project)
    } else {
        None
    };
    run_loop(
        problem,
        &mut graph,
        Method::Grape,
        opt,
        stop,
        projection,
        max_harmonics(problem.task.n),
    )
}

/// Records the cost as a function of the basis coefficients.
pub fn crab_graph(
    problem: &Problem,
    basis: &CrabBasis,
    coefficients: Vec<Vec<f64>>,
) -> Result<CostGraph> {
    basis.validate()?;
    let task = &problem.task;
    let map = Arc::new(basis.synthesis(task.n, task.dt()));
    let mut edges = vec![1.0; task.n];
    edges[0] = 0.0;
    edges[task.n - 1] = 0.0;
    let edges = Arc::new(edges);
    let (lower, upper, constrain) = (task.window.lower, task.window.upper, task.constrain);
    let shaper = move |tape: &mut Tape, c: Var| -> Result<Var> {
        let s = tape.linear_map(c, map.clone())?;
        if !constrain {
            return Ok(s);
        }
        let s = tape.vec_clamp(s, lower, upper)?;
        Ok(tape.vec_mul_const(s, edges.clone())?)
    };
    CostGraph::build(problem, coefficients, &shaper as &Shaper<'_>)
}

/// Optimises basis coefficients, clamping and zeroing the endpoints of the synthesised waveform.
pub fn run_crab_like(
    problem: &Problem,
    basis: &CrabBasis,
    init: &[FourierPulse],
    opt: OptimizerConfig,
    stop: &StopCriteria,
) -> Result<OptimizationResult> {
    if init.len() != problem.drive_count() {
        return Err(Error::LengthMismatch {
            what: "initial pulses vs drives",
            left: init.len(),
            right: problem.drive_count(),
        });
    }
    let coefficients = init.iter().map(|p| basis.coefficients(p)).collect();
    let mut graph = crab_graph(problem, basis, coefficients)?;
    run_loop(
        problem,
        &mut graph,
        Method::Crab,
        opt,
        stop,
        None,
        max_harmonics(problem.task.n),
    )
}

/// Dispatches to the baseline named by `config`.
pub fn run_baseline(
    problem: &Problem,
    config: &BaselineConfig,
    init: &[FourierPulse],
    opt: OptimizerConfig,
    stop: &StopCriteria,
) -> Result<OptimizationResult> {
    config.validate()?;
    match config {
        BaselineConfig::Grape => run_grape_like(problem, init, opt, stop),
        BaselineConfig::Crab { basis } => run_crab_like(problem, basis, init, opt, stop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{band_limit, out_of_band_ratio};
    use crate::pulse::{extract_fourier_report, sample, Harmonic, PwcSequence};

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed;
        move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    #[test]
    fn harmonic_basis_round_trips_band_limited_waveforms() {
        let (n, t, k) = (64, 20.0, 6);
        let basis = CrabBasis::harmonic(k, t);
        let map = basis.synthesis(n, t / n as f64);
        let mut next = lcg(3);
        for _ in 0..5 {
            let coeffs: Vec<f64> = (0..2 * k + 1).map(|_| next()).collect();
            let wave = map.dot(&ndarray::Array1::from(coeffs.clone())).to_vec();
            let projected = band_limit(&wave, k).unwrap();
            let err = wave
                .iter()
                .zip(&projected)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "projection moved the waveform by {err:e}");

            let report =
                extract_fourier_report(&PwcSequence::new(wave, t / n as f64).unwrap(), k).unwrap();
            let back = basis.coefficients(&report);
            let err = back
                .iter()
                .zip(&coeffs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "coefficient round trip error {err:e}");
        }
    }

    #[test]
    fn coefficients_reproduce_fourier_pulse() {
        let t = 30.0;
        let p = FourierPulse {
            a0: 0.3,
            harmonics: vec![
                Harmonic {
                    amplitude: 0.5,
                    phase: 1.1,
                },
                Harmonic {
                    amplitude: -0.2,
                    phase: -2.0,
                },
            ],
            gate_time: t,
        };
        let basis = CrabBasis::harmonic(3, t);
        let wave = basis
            .synthesis(40, t / 40.0)
            .dot(&ndarray::Array1::from(basis.coefficients(&p)));
        let expected = sample(&p, 40, t).unwrap().values;
        for (a, b) in wave.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_basis_is_seeded() {
        let a = CrabBasis::randomized(5, 50.0, 9);
        let b = CrabBasis::randomized(5, 50.0, 9);
        assert_eq!(a, b);
        assert_eq!(a.seed, Some(9));
        assert_ne!(a, CrabBasis::randomized(5, 50.0, 10));
        for (n, w) in a.frequencies.iter().enumerate() {
            let ratio = w * 50.0 / TAU;
            assert!((ratio - (n + 1) as f64).abs() <= 0.5);
        }
    }

    #[test]
    fn empty_basis_is_rejected() {
        let cfg = BaselineConfig::Crab {
            basis: CrabBasis {
                frequencies: vec![],
                seed: None,
            },
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn projection_enforces_bounds_and_endpoints() {
        let project = grape_projection(-1.0, 2.0);
        let mut blocks = vec![vec![5.0, -3.0, 1.5, 0.2, 7.0]];
        project(&mut blocks);
        assert_eq!(blocks[0], vec![0.0, -1.0, 1.5, 0.2, 0.0]);
    }

    #[test]
    fn clipping_spreads_the_spectrum() {
        let (n, t) = (100, 40.0);
        let basis = CrabBasis::harmonic(2, t);
        let wave = basis
            .synthesis(n, t / n as f64)
            .dot(&ndarray::Array1::from(vec![0.0, 3.0, 0.0, 0.0, 1.0]));
        assert!(out_of_band_ratio(&wave.to_vec(), 2) < 1e-12);
        let clipped: Vec<f64> = wave.iter().map(|v| v.clamp(-1.5, 1.5)).collect();
        assert!(out_of_band_ratio(&clipped, 2) > 1e-3);
    }
}
