// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use num_complex::Complex64;

use super::model::DeviceModel;
use crate::ad::{expm, Tape, Var};
use crate::linalg::{c, dagger, identity, CMat};
use crate::pulse::PwcSequence;
use crate::{Error, Result};

/// `rate e^{i beat t} op + h.c.`
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatingTerm {
    pub op: CMat,
    pub rate: Complex64,
    pub beat: f64,
}

/// Hamiltonian in a frame rotating at fixed per-mode frequencies.
///
/// `H(t) = static_part + sum_j Omega_j(t) drive_ops[j] + sum oscillating(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameHamiltonian {
    pub static_part: CMat,
    /// In-phase operator `a_j + a_j^dag` for each drive, ordered like the model's drives.
    pub drive_ops: Vec<CMat>,
    pub oscillating: Vec<OscillatingTerm>,
    /// Rotation frequency of each mode (rad/ns).
    pub frame_frequencies: Vec<f64>,
    /// Mode index of each drive.
    pub driven_modes: Vec<usize>,
    /// Diagonal of `sum_j frame_j n_j`.
    frame_generator: Vec<f64>,
}

/// Moves to the frame of the drives with the rotating-wave approximation on couplings.
///
/// Driven modes rotate at their drive frequency. Undriven modes rotate with the
/// first drive, so a single-drive problem is time independent. Exchange terms
/// between modes in different frames keep the beat `e^{i(w_a - w_b)t}`.
pub fn rotating_frame(model: &DeviceModel) -> Result<FrameHamiltonian> {
    for d in &model.drives {
        if !d.frequency.is_finite() || d.mode >= model.modes.len() {
            return Err(Error::MissingDriveFrequency(d.mode));
        }
    }
    let fallback = model.drives.first().map_or(0.0, |d| d.frequency);
    let frame: Vec<f64> = (0..model.modes.len())
        .map(|j| {
            model
                .drives
                .iter()
                .find(|d| d.mode == j)
                .map_or(fallback, |d| d.frequency)
        })
        .collect();

    let mut static_part = model.local_terms(&frame);
    let mut oscillating = Vec::new();
    for cp in &model.couplings {
        // Full-quadrature couplings lose their counter-rotating half here.
        let op = dagger(&model.lowering(cp.a)).dot(&model.lowering(cp.b));
        let beat = frame[cp.a] - frame[cp.b];
        if beat == 0.0 {
            static_part = static_part + (&op + &dagger(&op)) * c(cp.strength, 0.0);
        } else {
            oscillating.push(OscillatingTerm {
                op,
                rate: c(cp.strength, 0.0),
                beat,
            });
        }
    }

    let drive_ops = model
        .drives
        .iter()
        .map(|d| {
            let a = model.lowering(d.mode);
            &a + &dagger(&a)
        })
        .collect();

    let mut frame_generator = vec![0.0; model.dim()];
    for (j, w) in frame.iter().enumerate() {
        for (g, k) in frame_generator.iter_mut().zip(model.occupation(j)) {
            *g += w * k;
        }
    }

    Ok(FrameHamiltonian {
        static_part,
        drive_ops,
        oscillating,
        frame_frequencies: frame,
        driven_modes: model.drives.iter().map(|d| d.mode).collect(),
        frame_generator,
    })
}

impl FrameHamiltonian {
    pub fn dim(&self) -> usize {
        self.static_part.nrows()
    }

    /// Drift part at time `t`: static terms plus oscillating couplings.
    pub fn drift_at(&self, t: f64) -> CMat {
        let mut h = self.static_part.clone();
        for term in &self.oscillating {
            let z = term.rate * Complex64::from_polar(1.0, term.beat * t);
            let x = &term.op * z;
            h = h + &dagger(&x) + x;
        }
        h
    }

    /// Full `H(t)` for control values `controls[j]`.
    pub fn hamiltonian_at(&self, t: f64, controls: &[f64]) -> CMat {
        let mut h = self.drift_at(t);
        for (op, &omega) in self.drive_ops.iter().zip(controls) {
            h.scaled_add(c(omega, 0.0), op);
        }
        h
    }

    /// `exp(i sum_j w_j n_j t)`, the lab-to-frame rotation at time `t`.
    pub fn rotation(&self, t: f64) -> CMat {
        let diag = ndarray::Array1::from_iter(
            self.frame_generator
                .iter()
                .map(|&g| Complex64::from_polar(1.0, g * t)),
        );
        CMat::from_diag(&diag)
    }

    /// Drift matrices at the left edge of each slice; shared when time independent.
    fn slice_drifts(&self, n: usize, dt: f64) -> Vec<Arc<CMat>> {
        if self.oscillating.is_empty() {
            let h = Arc::new(self.static_part.clone());
            return vec![h; n];
        }
        (0..n)
            .map(|k| Arc::new(self.drift_at(k as f64 * dt)))
            .collect()
    }

    fn check_pulses(&self, lens: impl Iterator<Item = usize>) -> Result<usize> {
        let lens: Vec<usize> = lens.collect();
        if lens.len() != self.drive_ops.len() {
            return Err(Error::LengthMismatch {
                what: "pulses vs drives",
                left: lens.len(),
                right: self.drive_ops.len(),
            });
        }
        let n = lens.first().copied().unwrap_or(0);
        if let Some(&bad) = lens.iter().find(|&&l| l != n) {
            return Err(Error::LengthMismatch {
                what: "pulse lengths",
                left: n,
                right: bad,
            });
        }
        Ok(n)
    }
}

/// `U_T = U_N ... U_1` with `U_k = exp(-i H(t_k) dt)`, without recording.
pub fn evolve(frame: &FrameHamiltonian, pulses: &[PwcSequence]) -> Result<CMat> {
    let n = frame.check_pulses(pulses.iter().map(|p| p.len()))?;
    let dt = pulses.first().map_or(0.0, |p| p.dt);
    if pulses.iter().any(|p| p.dt != dt) {
        return Err(Error::InvalidConfig(
            "pulses must share the slice width".into(),
        ));
    }
    let mut u = identity(frame.dim());
    for k in 0..n {
        let controls: Vec<f64> = pulses.iter().map(|p| p.values[k]).collect();
        let h = frame.hamiltonian_at(k as f64 * dt, &controls);
        u = expm(&(h * c(0.0, -dt))).dot(&u);
    }
    Ok(u)
}

/// Cumulative propagators `U_0 = I, U_1, ..., U_N`, without recording.
pub fn propagators(frame: &FrameHamiltonian, pulses: &[PwcSequence]) -> Result<Vec<CMat>> {
    let n = frame.check_pulses(pulses.iter().map(|p| p.len()))?;
    let dt = pulses.first().map_or(0.0, |p| p.dt);
    let mut out = Vec::with_capacity(n + 1);
    out.push(identity(frame.dim()));
    for k in 0..n {
        let controls: Vec<f64> = pulses.iter().map(|p| p.values[k]).collect();
        let h = frame.hamiltonian_at(k as f64 * dt, &controls);
        let next = expm(&(h * c(0.0, -dt))).dot(&out[k]);
        out.push(next);
    }
    Ok(out)
}

/// Records the propagation of vector nodes `pulses` (one per drive) on `tape`.
pub fn record_evolution(
    tape: &mut Tape,
    frame: &FrameHamiltonian,
    pulses: &[Var],
    dt: f64,
) -> Result<Var> {
    let n = frame.check_pulses(pulses.iter().map(|&p| tape.vector(p).len()))?;
    let drifts = frame.slice_drifts(n, dt);
    let ops: Vec<Arc<CMat>> = frame.drive_ops.iter().cloned().map(Arc::new).collect();
    let mut u: Option<Var> = None;
    for (k, drift) in drifts.into_iter().enumerate() {
        let mut terms = Vec::with_capacity(pulses.len());
        for (&p, op) in pulses.iter().zip(&ops) {
            terms.push((tape.vec_element(p, k)?, Arc::clone(op)));
        }
        let generator = tape.lin_comb(c(0.0, -dt), Some(drift), terms)?;
        let step = tape.expm(generator)?;
        u = Some(match u {
            None => step,
            Some(prev) => tape.matmul(step, prev)?,
        });
    }
    u.ok_or(Error::InvalidGrid { n: 0, t: 0.0 })
}

/// Lab-frame reference propagation with `substeps` sub-slices per control slice.
///
/// Uses the static Hamiltonian with exchange-form couplings plus the
/// complex-exponential drives. Intended for cross-checking the frame.
pub fn evolve_lab(model: &DeviceModel, pulses: &[PwcSequence], substeps: usize) -> Result<CMat> {
    if pulses.len() != model.drives.len() {
        return Err(Error::LengthMismatch {
            what: "pulses vs drives",
            left: pulses.len(),
            right: model.drives.len(),
        });
    }
    let h0 = model.rwa_hamiltonian();
    let lowering: Vec<CMat> = model
        .drives
        .iter()
        .map(|d| model.lowering(d.mode))
        .collect();
    let n = pulses.first().map_or(0, |p| p.len());
    let dt = pulses.first().map_or(0.0, |p| p.dt);
    let h = dt / substeps.max(1) as f64;
    let mut u = identity(model.dim());
    for k in 0..n {
        for s in 0..substeps.max(1) {
            let t = k as f64 * dt + (s as f64 + 0.5) * h;
            let mut ham = h0.clone();
            for ((d, a), p) in model.drives.iter().zip(&lowering).zip(pulses) {
                let x = a * (Complex64::from_polar(p.values[k], d.frequency * t));
                ham = ham + &dagger(&x) + x;
            }
            u = expm(&(ham * c(0.0, -h))).dot(&u);
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_error, max_abs_diff, unitarity_error};
    use crate::quantum::model::build_model1;

    #[test]
    fn resonant_frame_has_no_detuning_or_beat() {
        let m = build_model1(2.0, 2.0, 0.0, 0.0, 0.01, 2)
            .unwrap()
            .with_drive(0, 2.0)
            .with_drive(1, 2.0);
        let f = rotating_frame(&m).unwrap();
        assert!(f.oscillating.is_empty());
        for i in 0..4 {
            assert_eq!(f.static_part[[i, i]].norm(), 0.0);
        }
    }

    #[test]
    fn distinct_drives_produce_hermitian_beats() {
        let m = build_model1(30.0, 27.0, -1.3, -1.3, 0.16, 3)
            .unwrap()
            .with_drive(0, 30.1)
            .with_drive(1, 26.9);
        let f = rotating_frame(&m).unwrap();
        assert_eq!(f.oscillating.len(), 1);
        assert!((f.oscillating[0].beat - 3.2).abs() < 1e-12);
        for t in [0.0, 0.37, 12.5, 49.9] {
            assert!(hermiticity_error(&f.hamiltonian_at(t, &[0.1, -0.2])) < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite_drive_frequency() {
        let m = build_model1(1.0, 1.0, 0.0, 0.0, 0.0, 2)
            .unwrap()
            .with_drive(1, f64::NAN);
        assert!(matches!(
            rotating_frame(&m),
            Err(Error::MissingDriveFrequency(1))
        ));
    }

    #[test]
    fn zero_everything_is_identity() {
        let m = build_model1(0.0, 0.0, 0.0, 0.0, 0.0, 2)
            .unwrap()
            .with_drive(0, 0.0);
        let f = rotating_frame(&m).unwrap();
        let p = PwcSequence::new(vec![0.0; 5], 0.2).unwrap();
        assert!(max_abs_diff(&evolve(&f, &[p]).unwrap(), &identity(4)) < 1e-15);
    }

    #[test]
    fn diagonal_drift_gives_phases() {
        let m = build_model1(1.0, 0.3, 0.0, 0.0, 0.0, 2)
            .unwrap()
            .with_drive(0, 0.0);
        let f = rotating_frame(&m).unwrap();
        let p = PwcSequence::new(vec![0.0; 10], 0.5).unwrap();
        let u = evolve(&f, &[p]).unwrap();
        for i in 0..4 {
            let e = f.static_part[[i, i]].re;
            assert!((u[[i, i]] - Complex64::from_polar(1.0, -e * 5.0)).norm() < 1e-12);
        }
        assert!(unitarity_error(&u) < 1e-12);
    }

    #[test]
    fn pulse_count_must_match_drives() {
        let m = build_model1(1.0, 1.0, 0.0, 0.0, 0.0, 2)
            .unwrap()
            .with_drive(0, 1.0);
        let f = rotating_frame(&m).unwrap();
        let a = PwcSequence::new(vec![0.0; 4], 0.1).unwrap();
        assert!(matches!(
            evolve(&f, &[a.clone(), a]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
