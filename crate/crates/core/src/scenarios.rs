// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Declarative experiment configurations and the runners built on them.
//!
//! Scenario files use lab units: GHz for mode frequencies, MHz for
//! anharmonicities, couplings and amplitude bounds, ns for times.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::ad::Tape;
use crate::baselines::{run_crab_like, run_grape_like, CrabBasis};
use crate::constraint::AmplitudeWindowConfig;
use crate::fourier::max_harmonics;
use crate::optimize::{
    random_initial_pulses, run_cocoa_from_samples, sample_initial, ControlTask, Method,
    OptimizationResult, OptimizerConfig, OptimizerState, Problem, StopCriteria, Target,
};
use crate::pulse::{extract_fourier_report, grid_times, FourierPulse, PwcSequence};
use crate::quantum::{
    build_model1, build_model2, dressed_subspace, evolve, infidelity, record_cnot_target,
    record_infidelity, x_on_both, x_on_second, DeviceModel, Subspace, TargetRef,
};
use crate::units::{ghz, mhz};
use crate::{Error, Result};

/// Device parameters in lab units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeviceSpec {
    /// Two transmons with a direct `g (a1 + a1^dag)(a2 + a2^dag)` coupling.
    DirectCoupling {
        qubit_ghz: [f64; 2],
        anharmonicity_mhz: [f64; 2],
        coupling_mhz: f64,
        levels: usize,
    },
    /// Two transmons exchanging excitations with a shared cavity.
    BusCavity {
        qubit_ghz: [f64; 2],
        cavity_ghz: f64,
        anharmonicity_mhz: [f64; 2],
        coupling_mhz: [f64; 2],
        qubit_levels: usize,
        cavity_levels: usize,
    },
}

impl DeviceSpec {
    /// Undriven model in rad/ns.
    pub fn build(&self) -> Result<DeviceModel> {
        match self {
            DeviceSpec::DirectCoupling {
                qubit_ghz,
                anharmonicity_mhz,
                coupling_mhz,
                levels,
            } => build_model1(
                ghz(qubit_ghz[0]),
                ghz(qubit_ghz[1]),
                mhz(anharmonicity_mhz[0]),
                mhz(anharmonicity_mhz[1]),
                mhz(*coupling_mhz),
                *levels,
            ),
            DeviceSpec::BusCavity {
                qubit_ghz,
                cavity_ghz,
                anharmonicity_mhz,
                coupling_mhz,
                qubit_levels,
                cavity_levels,
            } => build_model2(
                ghz(qubit_ghz[0]),
                ghz(qubit_ghz[1]),
                ghz(*cavity_ghz),
                mhz(anharmonicity_mhz[0]),
                mhz(anharmonicity_mhz[1]),
                mhz(coupling_mhz[0]),
                mhz(coupling_mhz[1]),
                *qubit_levels,
                *cavity_levels,
            ),
        }
    }

    /// Same device with every coupling set to `g` MHz.
    pub fn with_coupling(&self, g: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            DeviceSpec::DirectCoupling { coupling_mhz, .. } => *coupling_mhz = g,
            DeviceSpec::BusCavity { coupling_mhz, .. } => *coupling_mhz = [g, g],
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let values: Vec<f64> = match self {
            DeviceSpec::DirectCoupling {
                qubit_ghz,
                anharmonicity_mhz,
                coupling_mhz,
                ..
            } => [&qubit_ghz[..], &anharmonicity_mhz[..], &[*coupling_mhz]].concat(),
            DeviceSpec::BusCavity {
                qubit_ghz,
                cavity_ghz,
                anharmonicity_mhz,
                coupling_mhz,
                ..
            } => [
                &qubit_ghz[..],
                &[*cavity_ghz],
                &anharmonicity_mhz[..],
                &coupling_mhz[..],
            ]
            .concat(),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "device parameters must be finite".into(),
            ));
        }
        let qubits = match self {
            DeviceSpec::DirectCoupling { qubit_ghz, .. }
            | DeviceSpec::BusCavity { qubit_ghz, .. } => qubit_ghz,
        };
        if qubits.iter().any(|&f| f <= 0.0) {
            return Err(Error::InvalidConfig(
                "qubit frequencies must be positive".into(),
            ));
        }
        self.build().map(|_| ())
    }
}

/// Gate family and the drives it implies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateSpec {
    /// `I ⊗ X`, one drive on the second qubit at its `00 -> 01` transition.
    XOnSecond,
    /// `X ⊗ X`, one drive per qubit at its own transition from `00`.
    XOnBoth,
    /// `CNOT` up to single-qubit rotations, one drive on the target at `00 -> 01`.
    Cnot,
}

impl GateSpec {
    /// `(mode, frequency)` for each drive, from the dressed energies.
    pub fn drives(self, sub: &Subspace) -> Vec<(usize, f64)> {
        match self {
            GateSpec::XOnSecond | GateSpec::Cnot => vec![(1, sub.transition(0, 1))],
            GateSpec::XOnBoth => vec![(0, sub.transition(0, 2)), (1, sub.transition(0, 1))],
        }
    }

    fn target(self, theta: [f64; 6]) -> Target {
        match self {
            GateSpec::XOnSecond => Target::Fixed(x_on_second()),
            GateSpec::XOnBoth => Target::Fixed(x_on_both()),
            GateSpec::Cnot => Target::CnotFamily {
                initial_theta: theta,
            },
        }
    }
}

/// Starting rotations for the CNOT family: a pi rotation about x on the target.
pub const CNOT_INITIAL_THETA: [f64; 6] = [0.0, 0.0, 0.0, std::f64::consts::PI, 0.0, 0.0];

/// How the initial pulses are produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitSpec {
    /// Random harmonic pulses; see [`random_initial_pulses`].
    Random {
        seed: u64,
        amplitude_mhz: f64,
        harmonics: usize,
    },
    /// The phase-engineered analytic pulse with area parameter `area`.
    Swipht { area: f64 },
}

/// Amplitude window settings in lab units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lower_mhz: f64,
    pub upper_mhz: f64,
    #[serde(default = "default_g_amp")]
    pub g_amp: f64,
    #[serde(default = "default_g_edge")]
    pub g_edge: f64,
    /// Edge width as a fraction of the gate time.
    #[serde(default = "default_edge_fraction")]
    pub edge_fraction: f64,
}

fn default_g_amp() -> f64 {
    AmplitudeWindowConfig::DEFAULT_G_AMP
}

fn default_g_edge() -> f64 {
    AmplitudeWindowConfig::DEFAULT_G_EDGE
}

fn default_edge_fraction() -> f64 {
    AmplitudeWindowConfig::DEFAULT_EDGE_FRACTION
}

impl WindowSpec {
    pub fn symmetric(bound_mhz: f64) -> Self {
        Self {
            lower_mhz: -bound_mhz,
            upper_mhz: bound_mhz,
            g_amp: default_g_amp(),
            g_edge: default_g_edge(),
            edge_fraction: default_edge_fraction(),
        }
    }

    pub fn config(&self, gate_time: f64) -> Result<AmplitudeWindowConfig> {
        let cfg = AmplitudeWindowConfig {
            lower: mhz(self.lower_mhz),
            upper: mhz(self.upper_mhz),
            g_amp: self.g_amp,
            g_edge: self.g_edge,
            edge_width: self.edge_fraction * gate_time,
            gate_time,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parameter swept by a scenario, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum SweepAxis {
    #[default]
    None,
    Nc(Vec<usize>),
    /// Gate times in ns.
    Time(Vec<f64>),
    /// Coupling strengths in MHz.
    Coupling(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::Nc(_) => "nc",
            SweepAxis::Time(_) => "time",
            SweepAxis::Coupling(_) => "coupling",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::None => Vec::new(),
            SweepAxis::Nc(v) => v.iter().map(|&n| n as f64).collect(),
            SweepAxis::Time(v) | SweepAxis::Coupling(v) => v.clone(),
        }
    }
}

/// One reproducible experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub device: DeviceSpec,
    pub gate: GateSpec,
    /// ns.
    pub gate_time: f64,
    pub slices: usize,
    pub nc: usize,
    pub window: WindowSpec,
    /// Whether the amplitude window is part of the COCOA chain and the
    /// baselines clamp their waveforms.
    #[serde(default = "default_true")]
    pub constrain: bool,
    pub init: InitSpec,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub stop: StopCriteria,
    #[serde(default)]
    pub sweep: SweepAxis,
}

fn default_true() -> bool {
    true
}

impl Scenario {
    /// Checks every parameter without running an optimisation.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidConfig("scenario name is empty".into()));
        }
        self.device.validate()?;
        self.task_with(CNOT_INITIAL_THETA)?.validate()?;
        if !(self.optimizer.learning_rate > 0.0 && self.optimizer.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.optimizer.learning_rate
            )));
        }
        self.stop.validate()?;
        match &self.init {
            InitSpec::Random {
                amplitude_mhz,
                harmonics,
                ..
            } => {
                if !(amplitude_mhz.is_finite() && *amplitude_mhz >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "initial amplitude {amplitude_mhz} must be non-negative"
                    )));
                }
                if *harmonics > max_harmonics(self.slices) {
                    return Err(Error::NcTooLarge {
                        nc: *harmonics,
                        max: max_harmonics(self.slices),
                        n: self.slices,
                    });
                }
            }
            InitSpec::Swipht { area } => {
                if !(*area > 0.0 && area.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "SWIPHT area {area} must be positive"
                    )));
                }
                let delta = self.harmful_detuning()?;
                let t_min = speed_limit_t_min(*area, delta);
                if self.gate_time <= t_min {
                    return Err(Error::SpeedLimitViolated {
                        gate_time: self.gate_time,
                        t_min,
                    });
                }
            }
        }
        for point in self.sweep_points()? {
            point.validate_point()?;
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        self.device.validate()?;
        self.task_with(CNOT_INITIAL_THETA)?.validate()?;
        if let InitSpec::Swipht { area } = self.init {
            let t_min = speed_limit_t_min(area, self.harmful_detuning()?);
            if self.gate_time <= t_min {
                return Err(Error::SpeedLimitViolated {
                    gate_time: self.gate_time,
                    t_min,
                });
            }
        }
        Ok(())
    }

    fn task_with(&self, theta: [f64; 6]) -> Result<ControlTask> {
        Ok(ControlTask {
            target: self.gate.target(theta),
            gate_time: self.gate_time,
            n: self.slices,
            nc: self.nc,
            window: self.window.config(self.gate_time)?,
            constrain: self.constrain,
        })
    }

    /// Dressed computational subspace of the undriven device.
    pub fn subspace(&self) -> Result<Subspace> {
        let model = self.device.build()?;
        dressed_subspace(&model.rwa_hamiltonian(), &model.computational_labels())
    }

    /// `E(11) - E(10) - (E(01) - E(00))` of the dressed spectrum, in rad/ns (absolute value).
    pub fn harmful_detuning(&self) -> Result<f64> {
        let sub = self.subspace()?;
        Ok((sub.transition(2, 3) - sub.transition(0, 1)).abs())
    }

    /// Device with the drives implied by the gate.
    pub fn model(&self) -> Result<DeviceModel> {
        let sub = self.subspace()?;
        let mut model = self.device.build()?;
        for (mode, freq) in self.gate.drives(&sub) {
            model = model.with_drive(mode, freq);
        }
        Ok(model)
    }

    pub fn problem(&self) -> Result<Problem> {
        self.problem_with_theta(CNOT_INITIAL_THETA)
    }

    fn problem_with_theta(&self, theta: [f64; 6]) -> Result<Problem> {
        Problem::new(&self.model()?, self.task_with(theta)?)
    }

    /// Initial pulses in harmonic form, for methods that consume them.
    ///
    /// Analytic seeds are sampled and reported at the largest harmonic count.
    pub fn initial_pulses(&self, problem: &Problem) -> Result<Vec<FourierPulse>> {
        match &self.init {
            InitSpec::Random {
                seed,
                amplitude_mhz,
                harmonics,
            } => Ok(random_initial_pulses(
                *seed,
                problem.drive_count(),
                *harmonics,
                mhz(*amplitude_mhz),
                self.gate_time,
            )),
            InitSpec::Swipht { .. } => {
                let dt = problem.task.dt();
                self.seed_samples(problem)?
                    .into_iter()
                    .map(|v| {
                        extract_fourier_report(
                            &PwcSequence::new(v, dt)?,
                            max_harmonics(self.slices),
                        )
                    })
                    .collect()
            }
        }
    }

    /// Waveform the optimiser starts from, one block per drive, before any node.
    pub fn seed_samples(&self, problem: &Problem) -> Result<Vec<Vec<f64>>> {
        match &self.init {
            InitSpec::Random { .. } => sample_initial(problem, &self.initial_pulses(problem)?),
            InitSpec::Swipht { area } => {
                let delta = self.harmful_detuning()?;
                let wave = swipht_samples(self.slices, *area, self.gate_time, delta)?;
                Ok(vec![wave; problem.drive_count()])
            }
        }
    }

    /// Raw control values whose COCOA chain output approximates the seed waveform.
    ///
    /// Random seeds are used as they are. Analytic seeds are passed through the
    /// inverse of the amplitude squash so that the chain starts near them.
    pub fn initial_raw(&self, problem: &Problem) -> Result<Vec<Vec<f64>>> {
        let samples = self.seed_samples(problem)?;
        if !(self.constrain && matches!(self.init, InitSpec::Swipht { .. })) {
            return Ok(samples);
        }
        let cfg = &problem.task.window;
        let (c, h) = (0.5 * (cfg.upper + cfg.lower), 0.5 * (cfg.upper - cfg.lower));
        samples
            .into_iter()
            .map(|block| {
                block
                    .into_iter()
                    .map(|v| {
                        let y = (v - c) / h;
                        if y.abs() >= 1.0 {
                            return Err(Error::InvalidConfig(format!(
                                "seed value {v} lies outside the amplitude bounds"
                            )));
                        }
                        Ok(c + 2.0 * h * y.atanh() / cfg.g_amp)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn with_nc(&self, nc: usize) -> Self {
        Self { nc, ..self.clone() }
    }

    /// Same scenario at gate time `t`, keeping the slice density.
    pub fn with_gate_time(&self, t: f64) -> Self {
        let slices = ((self.slices as f64 * t / self.gate_time).round() as usize).max(2);
        Self {
            gate_time: t,
            slices,
            ..self.clone()
        }
    }

    pub fn with_coupling(&self, g_mhz: f64) -> Self {
        Self {
            device: self.device.with_coupling(g_mhz),
            ..self.clone()
        }
    }

    /// Replaces the random seed; analytic seeds are unaffected.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        if let InitSpec::Random { seed: s, .. } = &mut out.init {
            *s = seed;
        }
        out
    }

    pub fn seed(&self) -> Option<u64> {
        match self.init {
            InitSpec::Random { seed, .. } => Some(seed),
            InitSpec::Swipht { .. } => None,
        }
    }

    /// Every concrete scenario of the sweep, with the sweep axis cleared.
    pub fn sweep_points(&self) -> Result<Vec<Scenario>> {
        let base = Scenario {
            sweep: SweepAxis::None,
            ..self.clone()
        };
        let points = match &self.sweep {
            SweepAxis::None => Vec::new(),
            SweepAxis::Nc(v) => v.iter().map(|&nc| base.with_nc(nc)).collect(),
            SweepAxis::Time(v) => {
                if let Some(t) = v.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
                    return Err(Error::InvalidConfig(format!(
                        "sweep gate time {t} must be positive"
                    )));
                }
                v.iter().map(|&t| base.with_gate_time(t)).collect()
            }
            SweepAxis::Coupling(v) => v.iter().map(|&g| base.with_coupling(g)).collect(),
        };
        Ok(points)
    }
}

/// Runs one scenario with the given method.
///
/// COCOA on the CNOT family goes through [`cnot_local_refine`]; the baselines
/// use a harmonic basis of `nc` frequencies where one is needed.
pub fn run_scenario(scenario: &Scenario, method: Method) -> Result<OptimizationResult> {
    scenario.validate_point()?;
    if method == Method::Cocoa && scenario.gate == GateSpec::Cnot {
        return cnot_local_refine(scenario);
    }
    let problem = scenario.problem()?;
    match method {
        Method::Cocoa => run_cocoa_from_samples(
            &problem,
            scenario.initial_raw(&problem)?,
            scenario.optimizer,
            &scenario.stop,
        ),
        Method::Grape => run_grape_like(
            &problem,
            &scenario.initial_pulses(&problem)?,
            scenario.optimizer,
            &scenario.stop,
        ),
        Method::Crab => run_crab_like(
            &problem,
            &CrabBasis::harmonic(scenario.nc.max(1), scenario.gate_time),
            &scenario.initial_pulses(&problem)?,
            scenario.optimizer,
            &scenario.stop,
        ),
    }
}

fn chi_parts(t: f64, area: f64, gate_time: f64) -> (f64, f64, f64) {
    let c = area / gate_time.powi(8);
    let (u, v) = (t, gate_time - t);
    let chi = c * u.powi(4) * v.powi(4) + std::f64::consts::FRAC_PI_4;
    let chi_dot = 4.0 * c * u.powi(3) * v.powi(3) * (v - u);
    let chi_ddot = 4.0 * c * u * u * v * v * (3.0 * (v - u).powi(2) - 2.0 * u * v);
    (chi, chi_dot, chi_ddot)
}

/// Analytic pulse with `chi(t) = A t^4 (T - t)^4 / T^8 + pi / 4`:
///
/// `Omega = chi'' / (2 r) - r cot(2 chi)` with `r = sqrt(delta^2 / 4 - chi'^2)`.
pub fn swipht_pulse(t: f64, area: f64, gate_time: f64, delta: f64) -> Result<f64> {
    if !(0.0..=gate_time).contains(&t) {
        return Err(Error::InvalidConfig(format!(
            "time {t} outside [0, {gate_time}]"
        )));
    }
    let (chi, chi_dot, chi_ddot) = chi_parts(t, area, gate_time);
    let radicand = delta * delta / 4.0 - chi_dot * chi_dot;
    if radicand <= 0.0 {
        return Err(Error::SpeedLimitViolated {
            gate_time,
            t_min: speed_limit_t_min(area, delta),
        });
    }
    let r = radicand.sqrt();
    Ok(chi_ddot / (2.0 * r) - r / (2.0 * chi).tan())
}

/// The analytic pulse on the left edges of `n` slices.
pub fn swipht_samples(n: usize, area: f64, gate_time: f64, delta: f64) -> Result<Vec<f64>> {
    if n < 2 || !(gate_time > 0.0) {
        return Err(Error::InvalidGrid { n, t: gate_time });
    }
    grid_times(n, gate_time / n as f64)
        .into_iter()
        .map(|t| swipht_pulse(t, area, gate_time, delta))
        .collect()
}

/// `max_u u^3 (1-u)^3 (1-2u)` on `[0, 1/2]`, located by bisection on the derivative.
fn chi_dot_shape_max() -> f64 {
    let shape = |u: f64| u.powi(3) * (1.0 - u).powi(3) * (1.0 - 2.0 * u);
    // d/du = u^2 (1-u)^2 [3 (1-2u)^2 - 2 u (1-u)], positive below the root.
    let slope = |u: f64| 3.0 * (1.0 - 2.0 * u).powi(2) - 2.0 * u * (1.0 - u);
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shape(0.5 * (lo + hi))
}

/// Smallest gate time with `max_t |chi'| < delta / 2`.
///
/// `max_t chi' = 4 A s / T` with `s` the peak of the dimensionless shape, so
/// `T_min = 8 A s / delta`.
pub fn speed_limit_t_min(area: f64, delta: f64) -> f64 {
    8.0 * area * chi_dot_shape_max() / delta.abs()
}

/// One point of a sweep.
#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub scenario: Scenario,
    pub outcome: Result<OptimizationResult>,
}

/// Runs every sweep point of `base` on up to `workers` threads, in input order.
pub fn run_sweep(base: &Scenario, method: Method, workers: usize) -> Result<Vec<SweepPoint>> {
    let values = base.sweep.values();
    let points = base.sweep_points()?;
    Ok(run_points(points, values, method, workers))
}

fn run_points(
    points: Vec<Scenario>,
    values: Vec<f64>,
    method: Method,
    workers: usize,
) -> Vec<SweepPoint> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<OptimizationResult>>>> =
        points.iter().map(|_| Mutex::new(None)).collect();
    let workers = workers.clamp(1, points.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(point) = points.get(i) else { break };
                let outcome = run_scenario(point, method);
                *slots[i].lock().expect("sweep slot") = Some(outcome);
            });
        }
    });
    points
        .into_iter()
        .zip(values)
        .zip(slots)
        .map(|((scenario, value), slot)| SweepPoint {
            value,
            scenario,
            outcome: slot
                .into_inner()
                .expect("sweep slot")
                .expect("every point runs"),
        })
        .collect()
}

/// COCOA at each harmonic cutoff, from the same seed.
pub fn run_nc_sweep(
    base: &Scenario,
    nc_values: &[usize],
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    let max = max_harmonics(base.slices);
    if let Some(&nc) = nc_values.iter().find(|&&nc| nc > max) {
        return Err(Error::NcTooLarge {
            nc,
            max,
            n: base.slices,
        });
    }
    let sweep = Scenario {
        sweep: SweepAxis::Nc(nc_values.to_vec()),
        ..base.clone()
    };
    run_sweep(&sweep, Method::Cocoa, workers)
}

/// COCOA at each gate time, keeping the slice density of `base`.
pub fn run_time_sweep(base: &Scenario, times: &[f64], workers: usize) -> Result<Vec<SweepPoint>> {
    let sweep = Scenario {
        sweep: SweepAxis::Time(times.to_vec()),
        ..base.clone()
    };
    for point in sweep.sweep_points()? {
        point.validate_point()?;
    }
    run_sweep(&sweep, Method::Cocoa, workers)
}

/// First sweep value whose best fidelity exceeds `threshold`.
pub fn first_above(points: &[SweepPoint], threshold: f64) -> Option<f64> {
    points
        .iter()
        .find(|p| p.outcome.as_ref().is_ok_and(|r| r.fidelity() > threshold))
        .map(|p| p.value)
}

/// Fits the six rotation angles of the CNOT family to a fixed propagator.
pub fn fit_cnot_angles(
    problem: &Problem,
    u: &crate::linalg::CMat,
    start: [f64; 6],
    iterations: usize,
) -> Result<[f64; 6]> {
    let mut tape = Tape::new();
    let theta = tape.param(start.to_vec());
    let target = record_cnot_target(&mut tape, theta)?;
    let u = tape.constant(u.clone());
    let cost = record_infidelity(&mut tape, u, &TargetRef::Node(target), &problem.gate_frame)?;
    let mut state = OptimizerState::new(OptimizerConfig::adam(0.02), 6);
    let mut values = start.to_vec();
    let mut best = (tape.real(cost), values.clone());
    for _ in 0..iterations {
        let grads = tape.backward(cost)?;
        let g = grads.vector(theta).expect("angle leaf").to_vec();
        state.apply(&mut values, &g)?;
        tape.set_leaf(theta, values.clone())?;
        tape.forward()?;
        let f = tape.real(cost);
        if f < best.0 {
            best = (f, values.clone());
        }
    }
    Ok(best.1.try_into().expect("six angles"))
}

/// Infidelity of the seed waveform propagated without any node, at fitted angles.
pub fn seed_infidelity(scenario: &Scenario) -> Result<f64> {
    let problem = scenario.problem()?;
    let dt = problem.task.dt();
    let pulses = scenario
        .seed_samples(&problem)?
        .into_iter()
        .map(|v| PwcSequence::new(v, dt))
        .collect::<Result<Vec<_>>>()?;
    let u = evolve(&problem.frame, &pulses)?;
    let target = match &problem.task.target {
        Target::Fixed(t) => t.clone(),
        Target::CnotFamily { initial_theta } => {
            crate::quantum::cnot_target(&fit_cnot_angles(&problem, &u, *initial_theta, 2000)?)
        }
    };
    Ok(infidelity(&u, &target, &problem.gate_frame))
}

/// Local refinement of an analytic CNOT seed.
///
/// The rotation angles are first fitted to the seed's propagator with the
/// waveform frozen; pulse and angles are then trained jointly with the
/// scenario's optimiser.
pub fn cnot_local_refine(scenario: &Scenario) -> Result<OptimizationResult> {
    if scenario.gate != GateSpec::Cnot {
        return Err(Error::InvalidConfig(format!(
            "scenario {} does not target the CNOT family",
            scenario.name
        )));
    }
    let problem = scenario.problem()?;
    let raw = scenario.initial_raw(&problem)?;
    let graph = crate::optimize::cocoa_graph(&problem, raw.clone())?;
    let theta = fit_cnot_angles(&problem, graph.propagator(), CNOT_INITIAL_THETA, 2000)?;
    let problem = scenario.problem_with_theta(theta)?;
    run_cocoa_from_samples(&problem, raw, scenario.optimizer, &scenario.stop)
}

fn model1() -> DeviceSpec {
    DeviceSpec::DirectCoupling {
        qubit_ghz: [5.27, 4.67],
        anharmonicity_mhz: [-220.0, -220.0],
        coupling_mhz: 25.4,
        levels: 4,
    }
}

fn model2() -> DeviceSpec {
    DeviceSpec::BusCavity {
        qubit_ghz: [6.2, 6.8],
        cavity_ghz: 7.15,
        anharmonicity_mhz: [-350.0, -350.0],
        coupling_mhz: [250.0, 250.0],
        qubit_levels: 3,
        cavity_levels: 3,
    }
}

fn random_init(bound_mhz: f64) -> InitSpec {
    InitSpec::Random {
        seed: 0,
        amplitude_mhz: bound_mhz,
        harmonics: 5,
    }
}

/// Area parameter of the analytic CNOT seed.
pub const SWIPHT_AREA: f64 = 138.9;

/// The built-in experiments.
pub fn catalog() -> Vec<Scenario> {
    let single_x = Scenario {
        name: "single-x".into(),
        description: "X on the second transmon with the coupling always on".into(),
        device: model1(),
        gate: GateSpec::XOnSecond,
        gate_time: 50.0,
        slices: 148,
        nc: 5,
        window: WindowSpec::symmetric(30.0),
        constrain: true,
        init: random_init(30.0),
        optimizer: OptimizerConfig::adam(0.01),
        stop: StopCriteria::default(),
        sweep: SweepAxis::None,
    };
    let dual_x = Scenario {
        name: "dual-x".into(),
        description: "Simultaneous X on both transmons".into(),
        gate: GateSpec::XOnBoth,
        slices: 200,
        stop: StopCriteria {
            max_iterations: 5000,
            ..StopCriteria::default()
        },
        ..single_x.clone()
    };
    let nc_sweep = Scenario {
        name: "nc-sweep".into(),
        description: "Single X at harmonic cutoffs 1 to 8".into(),
        sweep: SweepAxis::Nc((1..=8).collect()),
        ..single_x.clone()
    };
    let coupling_sweep = Scenario {
        name: "coupling-sweep".into(),
        description: "Single X at weak, nominal and strong coupling".into(),
        sweep: SweepAxis::Coupling(vec![1.0, 25.4, 100.0]),
        ..single_x.clone()
    };
    let base = single_x.clone();
    let appendix = move |name: &str, description: &str, g: f64| Scenario {
        name: name.into(),
        description: description.into(),
        device: model1().with_coupling(g),
        gate_time: 20.0,
        slices: 80,
        window: WindowSpec::symmetric(40.0),
        init: random_init(40.0),
        ..base.clone()
    };
    let cnot = Scenario {
        name: "cnot-local".into(),
        description: "CNOT refined from the analytic phase-engineered pulse".into(),
        device: model2(),
        gate: GateSpec::Cnot,
        gate_time: 35.4,
        slices: 142,
        nc: 9,
        window: WindowSpec::symmetric(30.0),
        constrain: false,
        init: InitSpec::Swipht { area: SWIPHT_AREA },
        optimizer: OptimizerConfig::sgd(0.001),
        stop: StopCriteria {
            max_iterations: 300,
            ..StopCriteria::default()
        },
        sweep: SweepAxis::None,
    };
    let cnot_sweep = Scenario {
        name: "cnot-speed-sweep".into(),
        description: "CNOT refinement at gate times from 25 to 36 ns".into(),
        sweep: SweepAxis::Time((25..=36).map(f64::from).collect()),
        // Plain gradient descent stalls on the mixed angle/pulse landscape at short times.
        optimizer: OptimizerConfig::adam(0.001),
        ..cnot.clone()
    };
    let model2_x = Scenario {
        name: "model2-single-x".into(),
        description: "X on the second transmon of the cavity-coupled pair".into(),
        device: model2(),
        gate_time: 70.0,
        slices: 280,
        window: WindowSpec::symmetric(20.0),
        init: random_init(20.0),
        ..single_x.clone()
    };
    vec![
        single_x,
        dual_x,
        nc_sweep,
        coupling_sweep,
        appendix("weak-coupling", "Single X at 1 MHz coupling", 1.0),
        appendix("strong-coupling", "Single X at 100 MHz coupling", 100.0),
        model2_x,
        cnot,
        cnot_sweep,
    ]
}

/// Looks a scenario up by name.
pub fn find_scenario(name: &str) -> Option<Scenario> {
    catalog().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::band_limit;

    fn nominal_delta() -> f64 {
        mhz(26.4)
    }

    #[test]
    fn swipht_vanishes_at_both_ends() {
        let (t, d) = (35.4, nominal_delta());
        assert!(swipht_pulse(0.0, SWIPHT_AREA, t, d).unwrap().abs() < 1e-15);
        assert!(swipht_pulse(t, SWIPHT_AREA, t, d).unwrap().abs() < 1e-12);
    }

    #[test]
    fn swipht_matches_numeric_derivatives() {
        let (a, t, d): (f64, f64, f64) = (SWIPHT_AREA, 35.4, nominal_delta());
        let chi =
            |s: f64| a / t.powi(8) * s.powi(4) * (t - s).powi(4) + std::f64::consts::FRAC_PI_4;
        let mid = t / 2.0;
        for s in [mid, 0.3 * t, 0.8 * t] {
            let h = 1e-3;
            let d1 = (chi(s + h) - chi(s - h)) / (2.0 * h);
            let d2 = (chi(s + h) - 2.0 * chi(s) + chi(s - h)) / (h * h);
            let r = (d * d / 4.0 - d1 * d1).sqrt();
            let oracle = d2 / (2.0 * r) - r / (2.0 * chi(s)).tan();
            let value = swipht_pulse(s, a, t, d).unwrap();
            assert!((value - oracle).abs() < 1e-8, "t={s}: {value} vs {oracle}");
        }
    }

    #[test]
    fn speed_limit_scales_inversely_with_detuning() {
        let d = nominal_delta();
        let t1 = speed_limit_t_min(138.0, d);
        let t2 = speed_limit_t_min(138.0, 2.0 * d);
        assert!((t1 / t2 - 2.0).abs() < 1e-12);
        assert!((speed_limit_t_min(276.0, d) / t1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn speed_limit_is_sharp() {
        let (a, d) = (138.0, nominal_delta());
        let t_min = speed_limit_t_min(a, d);
        let just_above = swipht_samples(1000, a, t_min * 1.001, d).unwrap();
        assert!(just_above.iter().all(|v| v.is_finite()));
        assert!(matches!(
            swipht_samples(1000, a, t_min * 0.99, d),
            Err(Error::SpeedLimitViolated { .. })
        ));
    }

    #[test]
    fn swipht_seed_is_nearly_band_limited() {
        let cnot = find_scenario("cnot-local").unwrap();
        let delta = cnot.harmful_detuning().unwrap();
        let wave = swipht_samples(cnot.slices, SWIPHT_AREA, cnot.gate_time, delta).unwrap();
        let limited = band_limit(&wave, 9).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let diff: Vec<f64> = wave.iter().zip(&limited).map(|(a, b)| a - b).collect();
        assert!(rms(&diff) < 0.2 * rms(&wave));
    }

    #[test]
    fn dressed_detuning_is_close_to_nominal() {
        let delta = find_scenario("cnot-local")
            .unwrap()
            .harmful_detuning()
            .unwrap();
        assert!((delta / nominal_delta() - 1.0).abs() < 0.05);
    }

    #[test]
    fn catalog_is_complete_and_valid() {
        let cat = catalog();
        assert!(cat.len() >= 8);
        for name in [
            "single-x",
            "dual-x",
            "nc-sweep",
            "cnot-local",
            "cnot-speed-sweep",
            "weak-coupling",
            "strong-coupling",
            "model2-single-x",
        ] {
            assert!(cat.iter().any(|s| s.name == name), "missing {name}");
        }
        for s in &cat {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }

    #[test]
    fn single_x_parameters() {
        let s = find_scenario("single-x").unwrap();
        assert_eq!(
            s.device,
            DeviceSpec::DirectCoupling {
                qubit_ghz: [5.27, 4.67],
                anharmonicity_mhz: [-220.0, -220.0],
                coupling_mhz: 25.4,
                levels: 4,
            }
        );
        assert_eq!((s.gate_time, s.slices, s.nc), (50.0, 148, 5));
        assert_eq!((s.window.lower_mhz, s.window.upper_mhz), (-30.0, 30.0));
        assert_eq!(s.gate, GateSpec::XOnSecond);
    }

    #[test]
    fn scenario_json_round_trip() {
        for s in catalog() {
            let text = serde_json::to_string(&s).unwrap();
            let back: Scenario = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn invalid_points_are_rejected() {
        let s = find_scenario("single-x").unwrap().with_nc(74);
        assert!(matches!(
            s.validate(),
            Err(Error::NcTooLarge { max: 73, .. })
        ));
        let cnot = find_scenario("cnot-local").unwrap().with_gate_time(20.0);
        assert!(matches!(
            cnot.validate(),
            Err(Error::SpeedLimitViolated { .. })
        ));
    }

    #[test]
    fn time_rescaling_keeps_density() {
        let s = find_scenario("cnot-local").unwrap().with_gate_time(26.0);
        assert_eq!(s.slices, 104);
    }
}
