// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use num_complex::Complex64;

use super::frame::FrameHamiltonian;
use super::subspace::Subspace;
use crate::ad::{AdError, Tape, Var};
use crate::linalg::{c, dagger, embed, identity, kron, pauli_x, pauli_y, pauli_z, trace, CMat};

/// Maps a full propagator to the `d x d` matrix compared against the target.
///
/// `P = left^dag U right`, where `right` is the dressed isometry `B` and
/// `left = R(T) B D^dag` undoes the frame rotation and the free precession of
/// the dressed states at reference frequencies. Each driven qubit is referenced
/// to its drive frequency, an undriven qubit to the mean of its two
/// conditional transition frequencies.
#[derive(Clone, Debug)]
pub struct GateFrame {
    left_dagger: Arc<CMat>,
    right: Arc<CMat>,
}

impl GateFrame {
    /// `P = B^dag U B`, no frame correction.
    pub fn plain(sub: &Subspace) -> Self {
        Self {
            left_dagger: Arc::new(dagger(&sub.basis)),
            right: Arc::new(sub.basis.clone()),
        }
    }

    /// Frame-corrected projection for a two-qubit subspace labelled `00, 01, 10, 11`.
    pub fn new(frame: &FrameHamiltonian, sub: &Subspace, gate_time: f64) -> Self {
        let refs = reference_frequencies(frame, sub);
        let digits = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
        let free = CMat::from_diag(&ndarray::Array1::from_iter(digits.iter().map(
            |(n1, n2)| Complex64::from_polar(1.0, -(n1 * refs[0] + n2 * refs[1]) * gate_time),
        )));
        let left = frame.rotation(gate_time).dot(&sub.basis).dot(&free);
        Self {
            left_dagger: Arc::new(dagger(&left)),
            right: Arc::new(sub.basis.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.right.ncols()
    }

    pub fn project(&self, u: &CMat) -> CMat {
        self.left_dagger.dot(u).dot(&*self.right)
    }

    pub fn record_project(&self, tape: &mut Tape, u: Var) -> Result<Var, AdError> {
        let a = tape.const_matmul(Arc::clone(&self.left_dagger), u)?;
        tape.matmul_const(a, Arc::clone(&self.right))
    }
}

/// Reference precession frequency of each qubit for [`GateFrame::new`].
pub fn reference_frequencies(frame: &FrameHamiltonian, sub: &Subspace) -> [f64; 2] {
    let e = &sub.energies;
    let mean = [
        0.5 * ((e[2] - e[0]) + (e[3] - e[1])),
        0.5 * ((e[1] - e[0]) + (e[3] - e[2])),
    ];
    [0, 1].map(|q| {
        if frame.driven_modes.contains(&q) {
            frame.frame_frequencies[q]
        } else {
            mean[q]
        }
    })
}

/// `(Tr(M M^dag) + |Tr M|^2) / (d (d + 1))`.
pub fn gate_fidelity(m: &CMat) -> f64 {
    let d = m.nrows() as f64;
    let fro: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    (fro + trace(m).norm_sqr()) / (d * (d + 1.0))
}

/// Average gate fidelity of `u` against `target` with `M = target^dag P(u)`.
pub fn avg_gate_fidelity(u: &CMat, target: &CMat, gf: &GateFrame) -> f64 {
    gate_fidelity(&dagger(target).dot(&gf.project(u)))
}

pub fn infidelity(u: &CMat, target: &CMat, gf: &GateFrame) -> f64 {
    1.0 - avg_gate_fidelity(u, target, gf)
}

/// Target operand of a recorded infidelity.
#[derive(Clone, Debug)]
pub enum TargetRef {
    Fixed(Arc<CMat>),
    Node(Var),
}

/// Records `1 - f` for the propagator node `u`.
pub fn record_infidelity(
    tape: &mut Tape,
    u: Var,
    target: &TargetRef,
    gf: &GateFrame,
) -> Result<Var, AdError> {
    let p = gf.record_project(tape, u)?;
    let m = match target {
        TargetRef::Fixed(t) => tape.const_matmul(Arc::new(dagger(t)), p)?,
        TargetRef::Node(v) => {
            let td = tape.adjoint(*v)?;
            tape.matmul(td, p)?
        }
    };
    let d = gf.dim() as f64;
    let fro = tape.frobenius_sq(m)?;
    let tr = tape.trace(m)?;
    let tr2 = tape.abs2(tr)?;
    let sum = tape.add(fro, tr2)?;
    let neg = tape.scale(sum, -1.0 / (d * (d + 1.0)))?;
    tape.offset(neg, 1.0)
}

/// Controlled-NOT with the first qubit as control, basis `|00>, |01>, |10>, |11>`.
pub fn cnot() -> CMat {
    let mut m = CMat::zeros((4, 4));
    for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[[i, j]] = c(1.0, 0.0);
    }
    m
}

/// Generators `sigma_j` on qubit `i`, ordered `1x, 1y, 1z, 2x, 2y, 2z`.
fn rotation_generators() -> [CMat; 6] {
    let dims = [2, 2];
    let p = [pauli_x(), pauli_y(), pauli_z()];
    [
        embed(&p[0], 0, &dims),
        embed(&p[1], 0, &dims),
        embed(&p[2], 0, &dims),
        embed(&p[0], 1, &dims),
        embed(&p[1], 1, &dims),
        embed(&p[2], 1, &dims),
    ]
}

/// `CNOT * R_1x R_1y R_1z R_2x R_2y R_2z` with `R(theta) = exp(-i theta sigma / 2)`.
pub fn cnot_target(theta: &[f64; 6]) -> CMat {
    rotation_generators()
        .iter()
        .zip(theta)
        .fold(cnot(), |acc, (g, &th)| {
            let r = identity(4) * c((0.5 * th).cos(), 0.0) + g * c(0.0, -(0.5 * th).sin());
            acc.dot(&r)
        })
}

/// [`cnot_target`] recorded on the tape from a 6-vector node of angles.
pub fn record_cnot_target(tape: &mut Tape, theta: Var) -> Result<Var, AdError> {
    let eye = Arc::new(identity(4));
    let mut acc = tape.constant(cnot());
    for (i, g) in rotation_generators().into_iter().enumerate() {
        let th = tape.vec_element(theta, i)?;
        let half = tape.scale(th, 0.5)?;
        let cs = tape.cos(half)?;
        let sn = tape.sin(half)?;
        let r = tape.lin_comb(
            c(1.0, 0.0),
            None,
            vec![(cs, Arc::clone(&eye)), (sn, Arc::new(g * c(0.0, -1.0)))],
        )?;
        acc = tape.matmul(acc, r)?;
    }
    Ok(acc)
}

/// `I (x) X`: bit flip of the second qubit.
pub fn x_on_second() -> CMat {
    kron(&identity(2), &pauli_x())
}

/// `X (x) X`: simultaneous bit flip of both qubits.
pub fn x_on_both() -> CMat {
    kron(&pauli_x(), &pauli_x())
}
