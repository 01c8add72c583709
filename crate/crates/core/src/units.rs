// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Unit conversions. Internally times are in ns and frequencies in rad/ns.

use std::f64::consts::TAU;

/// `2 pi f` for `f` in GHz, in rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// `2 pi f` for `f` in MHz, in rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Inverse of [`mhz`].
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1e-3)
}

/// Inverse of [`ghz`].
pub fn to_ghz(w: f64) -> f64 {
    w / TAU
}
