// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gradient-based pulse engineering for coupled transmon qubits.
//!
//! Control values on a piecewise-constant grid pass through a smooth amplitude
//! window and a Fourier band-limit projection before unitary propagation. The
//! whole chain is recorded on a reverse-mode [`ad::Tape`], so one backward pass
//! gives the gradient of the gate infidelity with respect to every control value.

// Validation uses `!(a < b)` so that NaN is rejected along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ad;
pub mod baselines;
pub mod constraint;
pub mod error;
pub mod fourier;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod pulse;
pub mod quantum;
pub mod scenarios;
pub mod units;

pub use error::{Error, Result};
