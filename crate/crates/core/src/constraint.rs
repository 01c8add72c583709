// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Amplitude window and Fourier band-limit projection.
//!
//! Each transform exists twice: as a plain function on slices and as a tape
//! recording (`record_*`) so that gradients flow through it.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ad::{AdError, Tape, Var};
use crate::fourier::{self, band_mask, hermitian_deviation, max_harmonics};
use crate::{Error, Result};

/// Settings of the amplitude window.
///
/// Bounds are in the control-value unit; edge width and gate time in ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeWindowConfig {
    pub lower: f64,
    pub upper: f64,
    pub g_amp: f64,
    pub g_edge: f64,
    pub edge_width: f64,
    pub gate_time: f64,
}

impl AmplitudeWindowConfig {
    pub const DEFAULT_G_AMP: f64 = 0.5;
    pub const DEFAULT_G_EDGE: f64 = 100.0;
    /// Edge width as a fraction of the gate time.
    pub const DEFAULT_EDGE_FRACTION: f64 = 0.1;

    /// Symmetric-or-not bounds with default slopes and edge width.
    pub fn new(lower: f64, upper: f64, gate_time: f64) -> Result<Self> {
        let cfg = Self {
            lower,
            upper,
            g_amp: Self::DEFAULT_G_AMP,
            g_edge: Self::DEFAULT_G_EDGE,
            edge_width: Self::DEFAULT_EDGE_FRACTION * gate_time,
            gate_time,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lower < self.upper) {
            return bad(format!(
                "lower bound {} must be below upper {}",
                self.lower, self.upper
            ));
        }
        if !(self.gate_time > 0.0) {
            return bad(format!("gate time {} must be positive", self.gate_time));
        }
        if !(self.edge_width >= 0.0 && self.edge_width < self.gate_time / 2.0) {
            return bad(format!(
                "edge width {} must lie in [0, T/2) for T = {}",
                self.edge_width, self.gate_time
            ));
        }
        if !(self.g_edge > 0.0 && self.g_amp > 0.0) {
            return bad("window slopes must be positive".into());
        }
        Ok(())
    }

    fn center(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }

    fn half_range(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

pub fn s_down(x: f64, g: f64) -> f64 {
    let z = g * x;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

pub fn s_up(x: f64, g: f64) -> f64 {
    s_down(-x, g)
}

/// Rise-times-fall envelope that pins the waveform near zero at both ends.
pub fn edge_envelope(t: f64, cfg: &AmplitudeWindowConfig) -> f64 {
    let tt = cfg.gate_time;
    s_up((t - cfg.edge_width) / tt, cfg.g_edge)
        * s_down((t - (tt - cfg.edge_width)) / tt, cfg.g_edge)
}

/// Smooth squash of `omega` into `(lower, upper)`.
///
/// `2 S_up(x, g) - 1 = tanh(g x / 2)`, evaluated in that form.
pub fn s_amp(omega: f64, cfg: &AmplitudeWindowConfig) -> f64 {
    let (c, h) = (cfg.center(), cfg.half_range());
    c + h * (0.5 * cfg.g_amp * (omega - c) / h).tanh()
}

pub fn amplitude_window(omega: f64, t: f64, cfg: &AmplitudeWindowConfig) -> f64 {
    edge_envelope(t, cfg) * s_amp(omega, cfg)
}

/// Applies the window to a sequence sampled at `t_k = k dt`.
pub fn apply_window(values: &[f64], dt: f64, cfg: &AmplitudeWindowConfig) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| amplitude_window(v, k as f64 * dt, cfg))
        .collect()
}

/// Window applied to a vector node, with `dt = T / len`.
pub fn record_window(tape: &mut Tape, x: Var, cfg: &AmplitudeWindowConfig) -> Result<Var, AdError> {
    let n = tape.vector(x).len();
    let dt = cfg.gate_time / n as f64;
    let envelope: Vec<f64> = (0..n).map(|k| edge_envelope(k as f64 * dt, cfg)).collect();
    let (c, h) = (cfg.center(), cfg.half_range());
    let k = 0.5 * cfg.g_amp / h;
    let z = tape.vec_affine(x, k, -k * c)?;
    let t = tape.vec_tanh(z)?;
    let s = tape.vec_affine(t, h, c)?;
    tape.vec_mul_const(s, Arc::new(envelope))
}

/// Forward DFT; see [`crate::fourier`] for conventions.
pub fn dft(s: &[f64]) -> Vec<Complex64> {
    fourier::dft_real(s)
}

/// Inverse DFT of a conjugate-symmetric spectrum.
pub fn idft(x: &[Complex64]) -> Result<Vec<f64>> {
    let deviation = hermitian_deviation(x);
    if deviation > fourier::hermitian_tolerance(x) {
        return Err(AdError::NonHermitianSpectrum { deviation }.into());
    }
    let z = fourier::idft(x);
    let residue = z.iter().fold(0.0_f64, |a, v| a.max(v.im.abs()));
    if residue > fourier::HERMITIAN_TOL * z.iter().fold(1.0_f64, |a, v| a.max(v.re.abs())) {
        return Err(AdError::NonHermitianSpectrum { deviation: residue }.into());
    }
    Ok(z.into_iter().map(|v| v.re).collect())
}

fn check_nc(n: usize, nc: usize) -> Result<()> {
    let max = max_harmonics(n);
    if nc > max {
        return Err(Error::NcTooLarge { nc, max, n });
    }
    Ok(())
}

/// Orthogonal projection onto harmonics `0..=nc`.
pub fn band_limit(s: &[f64], nc: usize) -> Result<Vec<f64>> {
    check_nc(s.len(), nc)?;
    let mut x = dft(s);
    for (z, keep) in x.iter_mut().zip(band_mask(s.len(), nc)) {
        if !keep {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    idft(&x)
}

/// Band limit applied to a vector node.
pub fn record_band_limit(tape: &mut Tape, x: Var, nc: usize) -> Result<Var> {
    let n = tape.vector(x).len();
    check_nc(n, nc)?;
    let s = tape.dft(x)?;
    let m = tape.spectrum_mask(s, Arc::new(band_mask(n, nc)))?;
    Ok(tape.idft_real(m)?)
}

/// Largest `|X[m]| / max|X|` over bins outside the retained band.
pub fn out_of_band_ratio(s: &[f64], nc: usize) -> f64 {
    let x = dft(s);
    let peak = x.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    x.iter()
        .zip(band_mask(s.len(), nc))
        .filter(|(_, keep)| !keep)
        .fold(0.0_f64, |a, (z, _)| a.max(z.norm()))
        / peak
}
