// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(flatten)]
    pub kind: OptimizerKind,
    pub learning_rate: f64,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
            },
            learning_rate,
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::adam(0.01)
    }
}

/// Moment estimates and step count for one parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: usize,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, len: usize) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    /// Applies one update in place.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        match self.config.kind {
            OptimizerKind::Adam { .. } => adam_step(params, grads, self),
            OptimizerKind::Sgd => sgd_step(params, grads, self),
        }
    }
}

fn check(params: &[f64], grads: &[f64], state: &OptimizerState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::LengthMismatch {
            what: "parameters vs gradients",
            left: params.len(),
            right: grads.len(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            step: state.step + 1,
        });
    }
    Ok(())
}

/// Bias-corrected Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut OptimizerState) -> Result<()> {
    check(params, grads, state)?;
    let OptimizerKind::Adam {
        beta1,
        beta2,
        epsilon,
    } = state.config.kind
    else {
        return Err(Error::InvalidConfig(
            "adam_step needs an Adam configuration".into(),
        ));
    };
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let lr = state.config.learning_rate;
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

/// Plain gradient step `p -= lr g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], state: &mut OptimizerState) -> Result<()> {
    check(params, grads, state)?;
    state.step += 1;
    let lr = state.config.learning_rate;
    params.iter_mut().zip(grads).for_each(|(p, g)| *p -= lr * g);
    Ok(())
}

/// Termination thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    /// Infidelity tolerance.
    pub eps0: f64,
    /// Gradient-norm tolerance.
    pub eps1: f64,
    pub max_iterations: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            eps0: 1e-6,
            eps1: 1e-9,
            max_iterations: 3000,
        }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps1 > 0.0 && self.max_iterations > 0) {
            return Err(Error::InvalidConfig(format!(
                "stop criteria must be positive (eps0 {}, eps1 {}, max iterations {})",
                self.eps0, self.eps1, self.max_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Cost,
    Gradient,
    MaxIterations,
}

impl StopReason {
    pub fn converged(self) -> bool {
        !matches!(self, StopReason::MaxIterations)
    }
}

/// First satisfied criterion in the order cost, gradient, iteration cap.
pub fn stop_check(
    infidelity: f64,
    grad_norm: f64,
    iteration: usize,
    stop: &StopCriteria,
) -> Option<StopReason> {
    if infidelity < stop.eps0 {
        Some(StopReason::Cost)
    } else if grad_norm < stop.eps1 {
        Some(StopReason::Gradient)
    } else if iteration >= stop.max_iterations {
        Some(StopReason::MaxIterations)
    } else {
        None
    }
}
