// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Harmonic pulse ansatz and its piecewise-constant samples.
//!
//! A [`FourierPulse`] is `a0 + sum_n A_n cos(2 pi n t / T + phi_n)` on the
//! harmonic grid of the gate time. Amplitudes carry whatever unit the caller
//! uses for control values (rad/ns throughout this crate).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::fourier::{dft_real, max_harmonics};
use crate::{Error, Result};

/// One cosine term of the ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierPulse {
    pub a0: f64,
    /// Harmonics `n = 1..=N_c`, in order.
    pub harmonics: Vec<Harmonic>,
    /// Gate time `T` in ns.
    pub gate_time: f64,
}

impl FourierPulse {
    pub fn constant(a0: f64, gate_time: f64) -> Self {
        Self {
            a0,
            harmonics: Vec::new(),
            gate_time,
        }
    }

    pub fn nc(&self) -> usize {
        self.harmonics.len()
    }

    /// Fundamental frequency `1/T` in GHz.
    pub fn base_frequency(&self) -> f64 {
        1.0 / self.gate_time
    }
}

/// Evaluates the ansatz at time `t` (ns).
pub fn eval_fourier(p: &FourierPulse, t: f64) -> f64 {
    let w = TAU * t / p.gate_time;
    p.harmonics.iter().enumerate().fold(p.a0, |acc, (i, h)| {
        acc + h.amplitude * ((i + 1) as f64 * w + h.phase).cos()
    })
}

/// `N` control values of width `dt = T/N`, sampled at left slice edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwcSequence {
    pub values: Vec<f64>,
    pub dt: f64,
}

impl PwcSequence {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if values.len() < 2 || dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidGrid {
                n: values.len(),
                t: values.len() as f64 * dt,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "pulse contains non-finite values".into(),
            ));
        }
        Ok(Self { values, dt })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    /// Left edges `t_k = k dt`, `k = 0..N`.
    pub fn times(&self) -> Vec<f64> {
        grid_times(self.values.len(), self.dt)
    }
}

pub fn grid_times(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * dt).collect()
}

/// Samples `p` on `N` slices spanning `[0, T)`.
pub fn sample(p: &FourierPulse, n: usize, gate_time: f64) -> Result<PwcSequence> {
    if n < 2 || gate_time.is_nan() || gate_time <= 0.0 {
        return Err(Error::InvalidGrid { n, t: gate_time });
    }
    let dt = gate_time / n as f64;
    let values = grid_times(n, dt)
        .into_iter()
        .map(|t| eval_fourier(p, t))
        .collect();
    PwcSequence::new(values, dt)
}

/// Amplitude-phase coefficients of the band-limited content of `s`.
///
/// `a0 = X[0]/N`, `A_n = 2|X[n]|/N`, `phi_n = arg X[n]` with the
/// negative-exponent forward transform.
pub fn extract_fourier_report(s: &PwcSequence, nc: usize) -> Result<FourierPulse> {
    let n = s.len();
    let max = max_harmonics(n);
    if nc > max {
        return Err(Error::NcTooLarge { nc, max, n });
    }
    let x = dft_real(&s.values);
    let scale = 1.0 / n as f64;
    let harmonics = (1..=nc)
        .map(|m| Harmonic {
            amplitude: 2.0 * x[m].norm() * scale,
            phase: x[m].arg(),
        })
        .collect();
    Ok(FourierPulse {
        a0: x[0].re * scale,
        harmonics,
        gate_time: s.duration(),
    })
}
