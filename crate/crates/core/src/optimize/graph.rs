// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use super::task::{Problem, Target};
use crate::ad::{Tape, Var};
use crate::linalg::CMat;
use crate::quantum::{record_cnot_target, record_evolution, record_infidelity, TargetRef};
use crate::Result;

/// Per-drive transformation from a parameter leaf to the waveform that is propagated.
pub type Shaper<'a> = dyn Fn(&mut Tape, Var) -> Result<Var> + 'a;

/// Recorded cost for one problem: parameters, waveforms, propagator and infidelity.
///
/// Parameters are grouped in blocks: one per drive, then the six target
/// angles for the CNOT family.
#[derive(Clone, Debug)]
pub struct CostGraph {
    tape: Tape,
    pulse_leaves: Vec<Var>,
    theta_leaf: Option<Var>,
    shaped: Vec<Var>,
    propagator: Var,
    cost: Var,
}

impl CostGraph {
    pub fn build(
        problem: &Problem,
        pulse_params: Vec<Vec<f64>>,
        shaper: &Shaper<'_>,
    ) -> Result<Self> {
        let mut tape = Tape::new();
        let pulse_leaves: Vec<Var> = pulse_params.into_iter().map(|p| tape.param(p)).collect();
        let mut shaped = Vec::with_capacity(pulse_leaves.len());
        for &leaf in &pulse_leaves {
            shaped.push(shaper(&mut tape, leaf)?);
        }
        let propagator = record_evolution(&mut tape, &problem.frame, &shaped, problem.task.dt())?;
        let (target, theta_leaf) = match &problem.task.target {
            Target::Fixed(t) => (TargetRef::Fixed(Arc::new(t.clone())), None),
            Target::CnotFamily { initial_theta } => {
                let th = tape.param(initial_theta.to_vec());
                (
                    TargetRef::Node(record_cnot_target(&mut tape, th)?),
                    Some(th),
                )
            }
        };
        let cost = record_infidelity(&mut tape, propagator, &target, &problem.gate_frame)?;
        Ok(Self {
            tape,
            pulse_leaves,
            theta_leaf,
            shaped,
            propagator,
            cost,
        })
    }

    fn leaves(&self) -> impl Iterator<Item = Var> + '_ {
        self.pulse_leaves.iter().copied().chain(self.theta_leaf)
    }

    pub fn params(&self) -> Vec<Vec<f64>> {
        self.leaves()
            .map(|v| self.tape.vector(v).to_vec())
            .collect()
    }

    pub fn set_params(&mut self, params: &[Vec<f64>]) -> Result<()> {
        let leaves: Vec<Var> = self.leaves().collect();
        for (leaf, p) in leaves.into_iter().zip(params) {
            self.tape.set_leaf(leaf, p.clone())?;
        }
        self.tape.forward()?;
        Ok(())
    }

    pub fn infidelity(&self) -> f64 {
        self.tape.real(self.cost)
    }

    /// Gradient blocks matching [`CostGraph::params`].
    pub fn gradient(&self) -> Result<Vec<Vec<f64>>> {
        let g = self.tape.backward(self.cost)?;
        Ok(self
            .leaves()
            .map(|v| g.vector(v).map(<[f64]>::to_vec).unwrap_or_default())
            .collect())
    }

    pub fn shaped_pulses(&self) -> Vec<Vec<f64>> {
        self.shaped
            .iter()
            .map(|&v| self.tape.vector(v).to_vec())
            .collect()
    }

    pub fn propagator(&self) -> &CMat {
        self.tape.matrix(self.propagator)
    }

    pub fn theta(&self) -> Option<[f64; 6]> {
        self.theta_leaf
            .map(|v| self.tape.vector(v).try_into().expect("six angles"))
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn tape_mut(&mut self) -> &mut Tape {
        &mut self.tape
    }

    pub fn pulse_leaves(&self) -> &[Var] {
        &self.pulse_leaves
    }

    pub fn cost_node(&self) -> Var {
        self.cost
    }
}
