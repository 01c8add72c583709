// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::constraint::AmplitudeWindowConfig;
use crate::fourier::max_harmonics;
use crate::linalg::{unitarity_error, CMat};
use crate::quantum::{
    dressed_subspace, rotating_frame, DeviceModel, FrameHamiltonian, GateFrame, Subspace,
};
use crate::{Error, Result};

/// Gate to synthesise on the computational subspace.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Fixed(CMat),
    /// `CNOT` times six trainable single-qubit rotations, starting from these angles.
    CnotFamily {
        initial_theta: [f64; 6],
    },
}

/// What to optimise and on which grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlTask {
    pub target: Target,
    /// Gate time in ns.
    pub gate_time: f64,
    /// Number of slices.
    pub n: usize,
    /// Retained harmonics.
    pub nc: usize,
    /// Amplitude bounds and window shape; the bounds also drive baseline clamping.
    pub window: AmplitudeWindowConfig,
    /// Whether the amplitude window node is part of the chain.
    pub constrain: bool,
}

impl ControlTask {
    pub fn dt(&self) -> f64 {
        self.gate_time / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.gate_time > 0.0) {
            return Err(Error::InvalidGrid {
                n: self.n,
                t: self.gate_time,
            });
        }
        let max = max_harmonics(self.n);
        if self.nc > max {
            return Err(Error::NcTooLarge {
                nc: self.nc,
                max,
                n: self.n,
            });
        }
        self.window.validate()?;
        if (self.window.gate_time - self.gate_time).abs() > 1e-12 * self.gate_time {
            return Err(Error::InvalidConfig(format!(
                "window gate time {} differs from task gate time {}",
                self.window.gate_time, self.gate_time
            )));
        }
        if let Target::Fixed(t) = &self.target {
            if t.dim() != (4, 4) || unitarity_error(t) > 1e-10 {
                return Err(Error::InvalidConfig("target must be a 4x4 unitary".into()));
            }
        }
        Ok(())
    }
}

/// Everything derived once from a device and a task, shared by all methods.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: DeviceModel,
    pub task: ControlTask,
    pub frame: FrameHamiltonian,
    pub subspace: Subspace,
    pub gate_frame: GateFrame,
}

impl Problem {
    pub fn new(model: &DeviceModel, task: ControlTask) -> Result<Self> {
        task.validate()?;
        if model.drives.is_empty() {
            return Err(Error::InvalidConfig("model has no drives".into()));
        }
        let frame = rotating_frame(model)?;
        let subspace = dressed_subspace(&model.rwa_hamiltonian(), &model.computational_labels())?;
        let gate_frame = GateFrame::new(&frame, &subspace, task.gate_time);
        Ok(Self {
            model: model.clone(),
            task,
            frame,
            subspace,
            gate_frame,
        })
    }

    pub fn drive_count(&self) -> usize {
        self.frame.drive_ops.len()
    }
}
