// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Matrix exponential by scaling and squaring of a truncated Taylor series.
//!
//! The forward pass keeps every intermediate of the Horner evaluation and of
//! the squaring chain, so the adjoint is the exact reverse-mode derivative of
//! the same composition. No eigendecomposition is involved, which keeps the
//! derivative well defined at degenerate spectra.

use std::sync::OnceLock;

use crate::linalg::{dagger, identity, norm1, CMat};

const MIN_DEGREE: usize = 4;
const MAX_DEGREE: usize = 18;

/// Largest `||X||_1` for which the degree-`m` remainder bound
/// `e^t t^(m+1) / (m+1)!` stays below unit round-off.
fn theta_table() -> &'static [f64; MAX_DEGREE + 1] {
    static TABLE: OnceLock<[f64; MAX_DEGREE + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let unit = f64::EPSILON / 2.0;
        let mut table = [0.0; MAX_DEGREE + 1];
        for (m, slot) in table.iter_mut().enumerate().skip(1) {
            let bound = |t: f64| {
                let mut term = t.exp();
                for k in 1..=(m + 1) {
                    term *= t / k as f64;
                }
                term
            };
            let (mut lo, mut hi) = (0.0_f64, 16.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if bound(mid) <= unit {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            *slot = lo;
        }
        table
    })
}

/// Chooses `(degree, squarings)` minimising the number of matrix products.
fn plan(norm: f64) -> (usize, u32) {
    let table = theta_table();
    let mut best = (MAX_DEGREE, u32::MAX, usize::MAX);
    for (m, &theta) in table
        .iter()
        .enumerate()
        .take(MAX_DEGREE + 1)
        .skip(MIN_DEGREE)
    {
        let s = if norm <= theta {
            0
        } else {
            (norm / theta).log2().ceil() as u32
        };
        let cost = m - 1 + s as usize;
        if cost < best.2 {
            best = (m, s, cost);
        }
    }
    (best.0, best.1)
}

/// Intermediates of one exponential, retained for the adjoint.
#[derive(Clone, Debug)]
pub(crate) struct ExpmTrace {
    squarings: u32,
    scaled: CMat,
    /// Horner iterates `Z_k` for `k = degree-1 ..= 1`, in that order.
    horner: Vec<CMat>,
    /// `P_0 ..= P_{s-1}`, each squared to produce the next.
    squares: Vec<CMat>,
}

/// `e^M` without recording intermediates.
pub fn expm(m: &CMat) -> CMat {
    expm_traced(m).0
}

pub(crate) fn expm_traced(m: &CMat) -> (CMat, ExpmTrace) {
    let n = m.nrows();
    let (degree, squarings) = plan(norm1(m));
    let scaled = m * 2f64.powi(-(squarings as i32));
    let eye = identity(n);

    // Z_m = I, Z_{k-1} = I + X Z_k / k.
    let mut horner = Vec::with_capacity(degree.saturating_sub(1));
    let mut z = &eye + &(&scaled * (1.0 / degree as f64));
    for k in (1..degree).rev() {
        let next = &eye + &(scaled.dot(&z) * (1.0 / k as f64));
        horner.push(z);
        z = next;
    }

    let mut squares = Vec::with_capacity(squarings as usize);
    for _ in 0..squarings {
        let next = z.dot(&z);
        squares.push(z);
        z = next;
    }
    (
        z,
        ExpmTrace {
            squarings,
            scaled,
            horner,
            squares,
        },
    )
}

/// Pulls the output adjoint back through the traced composition.
pub(crate) fn expm_adjoint(trace: &ExpmTrace, out_adjoint: &CMat) -> CMat {
    let mut g = out_adjoint.clone();
    for p in trace.squares.iter().rev() {
        let ph = dagger(p);
        g = g.dot(&ph) + ph.dot(&g);
    }

    let degree = trace.horner.len() + 1;
    let xh = dagger(&trace.scaled);
    let mut x_adj = CMat::zeros(trace.scaled.dim());
    // Walk k = 1 ..= degree-1: Z_{k-1} = I + X Z_k / k.
    for (idx, zk) in trace.horner.iter().enumerate().rev() {
        let k = degree - 1 - idx;
        let inv_k = 1.0 / k as f64;
        x_adj += &(g.dot(&dagger(zk)) * inv_k);
        g = xh.dot(&g) * inv_k;
    }
    // Z_{m-1} = I + X / m.
    x_adj += &(g * (1.0 / degree as f64));
    x_adj * 2f64.powi(-(trace.squarings as i32))
}
