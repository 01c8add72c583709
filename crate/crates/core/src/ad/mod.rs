// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reverse-mode differentiation.
//!
//! A [`Tape`] records each primitive as it is evaluated. One call to
//! [`Tape::backward`] yields the derivative of a real scalar output with
//! respect to every gradient-enabled leaf.

mod check;
mod matexp;
mod tape;
mod value;

pub use check::check_gradient;
pub use matexp::expm;
pub use tape::{Gradients, Tape, Var};
pub use value::{Shape, Value};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdError {
    #[error("backward requires a real scalar output, got {0}")]
    NonScalarOutput(Shape),
    #[error("{op}: expected {expected}, found {found}")]
    ShapeMismatch {
        op: &'static str,
        expected: &'static str,
        found: Shape,
    },
    #[error("{op}: operand lengths differ ({left} vs {right})")]
    LengthMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },
    #[error("matrix is not square ({0}x{1})")]
    NonSquare(usize, usize),
    #[error("{op}: non-finite input")]
    NonFinite { op: &'static str },
    #[error("spectrum is not conjugate-symmetric (deviation {deviation:e})")]
    NonHermitianSpectrum { deviation: f64 },
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("leaf holds {expected}, cannot assign {found}")]
    LeafShape { expected: Shape, found: Shape },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("linear combination has neither base nor terms")]
    EmptyCombination,
    #[error("non-finite objective at probe point {index}")]
    NonFiniteProbe { index: usize },
}

#[cfg(test)]
mod tests;
