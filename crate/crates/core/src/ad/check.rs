// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use super::{AdError, Tape, Value, Var};

/// Largest relative deviation between the tape gradient and central differences.
///
/// `leaf` must be a real scalar or real vector leaf on which `output` depends.
/// Each component is perturbed by `±h`, the tape is re-run, and the result is
/// compared with the reverse sweep: `max_i |AD_i - FD_i| / max(|FD_i|, 1e-12)`.
/// The tape is restored to its original leaf value before returning.
pub fn check_gradient(tape: &mut Tape, output: Var, leaf: Var, h: f64) -> Result<f64, AdError> {
    let original = tape.value(leaf).clone();
    let base: Vec<f64> = match &original {
        Value::Real(x) => vec![*x],
        Value::Vector(v) => v.clone(),
        other => {
            return Err(AdError::ShapeMismatch {
                op: "check_gradient",
                expected: "real scalar or vector leaf",
                found: other.shape(),
            })
        }
    };
    let rebuild = |x: Vec<f64>| -> Value {
        match original {
            Value::Real(_) => Value::Real(x[0]),
            _ => Value::Vector(x),
        }
    };

    tape.forward()?;
    let grads = tape.backward(output)?;
    let ad: Vec<f64> = match grads.get(leaf) {
        Some(Value::Real(g)) => vec![*g],
        Some(Value::Vector(g)) => g.clone(),
        _ => vec![0.0; base.len()],
    };

    let mut probe = |x: Vec<f64>, index: usize| -> Result<f64, AdError> {
        tape.set_leaf(leaf, rebuild(x))?;
        tape.forward()?;
        let f = tape.real(output);
        if !f.is_finite() {
            return Err(AdError::NonFiniteProbe { index });
        }
        Ok(f)
    };

    let mut worst = 0.0_f64;
    let mut outcome = Ok(());
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let (fp, fm) = match (probe(plus, i), probe(minus, i)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                outcome = Err(e);
                break;
            }
        };
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((ad[i] - fd).abs() / fd.abs().max(1e-12));
    }

    tape.set_leaf(leaf, original)?;
    tape.forward()?;
    outcome.map(|_| worst)
}
