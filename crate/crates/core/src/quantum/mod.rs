// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Device Hamiltonians, rotating frames, dressed subspaces and gate fidelity.

mod frame;
mod gate;
mod model;
mod subspace;

pub use frame::{
    evolve, evolve_lab, propagators, record_evolution, rotating_frame, FrameHamiltonian,
    OscillatingTerm,
};
pub use gate::{
    avg_gate_fidelity, cnot, cnot_target, gate_fidelity, infidelity, record_cnot_target,
    record_infidelity, reference_frequencies, x_on_both, x_on_second, GateFrame, TargetRef,
};
pub use model::{build_model1, build_model2, Coupling, CouplingForm, DeviceModel, Drive, Mode};
pub use subspace::{bare_subspace, dressed_subspace, Subspace};
