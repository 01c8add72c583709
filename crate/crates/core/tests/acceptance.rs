// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary so the report is always printed. Set
//! `QOC_ACCEPTANCE=1,7` to run a subset.

use std::cell::Cell;
use std::f64::consts::TAU;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRng, TestRunner};

use qoc_core::baselines::grape_graph;
use qoc_core::constraint::{band_limit, dft, idft, out_of_band_ratio};
use qoc_core::fourier::max_harmonics;
use qoc_core::linalg::{dagger, identity, unitarity_error};
use qoc_core::optimize::{cocoa_graph, CostGraph, Method, OptimizationResult};
use qoc_core::pulse::PwcSequence;
use qoc_core::quantum::{cnot_target, evolve, gate_fidelity};
use qoc_core::scenarios::{find_scenario, run_scenario, speed_limit_t_min, DeviceSpec, Scenario};
use qoc_core::units::mhz;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Band-limit ledger shared by every optimisation in this run.
#[derive(Default)]
struct BandAudit {
    runs: usize,
    worst: f64,
    worst_run: String,
}

impl BandAudit {
    fn record(&mut self, label: &str, nc: usize, result: &OptimizationResult) {
        self.runs += 1;
        for pulse in &result.pulses {
            let r = out_of_band_ratio(&pulse.values, nc);
            if r >= self.worst {
                self.worst = r;
                self.worst_run = label.to_string();
            }
        }
    }
}

fn run(label: &str, scenario: &Scenario, audit: &mut BandAudit) -> OptimizationResult {
    let start = Instant::now();
    let result = run_scenario(scenario, Method::Cocoa).unwrap_or_else(|e| panic!("{label}: {e}"));
    audit.record(label, scenario.nc, &result);
    println!(
        "    {label}: infidelity {:.3e} after {} iterations ({:.0} s)",
        result.infidelity,
        result.iterations,
        start.elapsed().as_secs_f64()
    );
    result
}

/// Model 1 with two levels per transmon on a 32-slice grid.
fn two_level(nc: usize, constrain: bool) -> Scenario {
    let base = find_scenario("single-x").unwrap();
    let device = match base.device.clone() {
        DeviceSpec::DirectCoupling {
            qubit_ghz,
            anharmonicity_mhz,
            coupling_mhz,
            ..
        } => DeviceSpec::DirectCoupling {
            qubit_ghz,
            anharmonicity_mhz,
            coupling_mhz,
            levels: 2,
        },
        other => other,
    };
    Scenario {
        device,
        slices: 32,
        nc,
        constrain,
        ..base
    }
}

/// Central differences of the infidelity with respect to every slice parameter.
fn finite_differences(graph: &mut CostGraph, raw: &[f64], h: f64) -> Vec<f64> {
    let mut at = |x: Vec<f64>| {
        graph.set_params(&[x]).unwrap();
        graph.infidelity()
    };
    let fd = (0..raw.len())
        .map(|i| {
            let mut plus = raw.to_vec();
            plus[i] += h;
            let mut minus = raw.to_vec();
            minus[i] -= h;
            (at(plus) - at(minus)) / (2.0 * h)
        })
        .collect();
    graph.set_params(&[raw.to_vec()]).unwrap();
    fd
}

/// Worst deviation relative to the largest gradient component, and the
/// worst plain per-component relative deviation.
///
/// The edge envelope drives the first and last components towards zero, where
/// central differences are dominated by forward-pass rounding.
fn gradient_errors(ad: &[f64], fd: &[f64]) -> (f64, f64) {
    let scale = fd.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    ad.iter()
        .zip(fd)
        .fold((0.0_f64, 0.0_f64), |(n, c), (a, f)| {
            let d = (a - f).abs();
            (n.max(d / scale), c.max(d / f.abs().max(1e-300)))
        })
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let scenario = two_level(5, true);
    let problem = scenario.problem().unwrap();
    let config = Config {
        cases: 4,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    let mut runner = TestRunner::new_with_rng(config, rng);
    let worst = Cell::new((0.0_f64, 0.0_f64));
    let outcome = runner.run(&prop::collection::vec(-25.0..25.0_f64, 32), |amps| {
        let raw: Vec<f64> = amps.iter().map(|&a| mhz(a)).collect();
        let mut graph = cocoa_graph(&problem, vec![raw.clone()]).unwrap();
        let ad = graph.gradient().unwrap().remove(0);
        let fd = finite_differences(&mut graph, &raw, 1e-5);
        let (scaled, plain) = gradient_errors(&ad, &fd);
        let (w0, w1) = worst.get();
        worst.set((w0.max(scaled), w1.max(plain)));
        prop_assert!(scaled < 1e-5, "relative error {scaled:e}");
        Ok(())
    });
    let secs = start.elapsed().as_secs_f64();
    let (scaled, plain) = worst.get();
    Outcome::new(
        outcome.is_ok() && secs < 30.0,
        format!(
            "max error {scaled:.2e} relative to the largest component (per component {plain:.2e}) over 4 random pulses, {secs:.1} s"
        ),
    )
}

fn single_x(audit: &mut BandAudit) -> (Outcome, f64) {
    let s = find_scenario("single-x").unwrap();
    let r = run("single-x", &s, audit);
    (
        Outcome::new(
            r.infidelity <= 1e-3 && r.iterations <= 3000,
            format!(
                "infidelity {:.3e} after {} iterations (need <= 1e-3)",
                r.infidelity, r.iterations
            ),
        ),
        r.infidelity,
    )
}

fn dual_x(audit: &mut BandAudit) -> Outcome {
    let s = find_scenario("dual-x").unwrap();
    let r = run("dual-x", &s, audit);
    Outcome::new(
        r.fidelity() > 0.999 && r.iterations <= 5000,
        format!(
            "fidelity {:.5} after {} iterations (need > 0.999)",
            r.fidelity(),
            r.iterations
        ),
    )
}

fn nc_study(audit: &mut BandAudit, at_five: Option<f64>) -> Outcome {
    let base = find_scenario("nc-sweep").unwrap();
    let mut best = |nc: usize| {
        let s = base.with_nc(nc);
        run(&format!("nc-sweep N_c = {nc}"), &s, audit).infidelity
    };
    let one = best(1);
    let five = at_five.unwrap_or_else(|| best(5));
    let eight = best(8);
    Outcome::new(
        five <= one / 10.0 && eight > five / 2.0,
        format!("best at N_c = 1, 5, 8: {one:.3e}, {five:.3e}, {eight:.3e}"),
    )
}

fn speed_limit(audit: &mut BandAudit) -> Outcome {
    let t_min = speed_limit_t_min(138.0, mhz(26.4));
    let limit_ok = (t_min - 24.95).abs() <= 0.05;

    let base = find_scenario("cnot-speed-sweep").unwrap();
    let mut reached = None;
    for point in base.sweep_points().unwrap().into_iter().rev() {
        let t = point.gate_time;
        if !(26.0..=36.0).contains(&t) {
            continue;
        }
        let r = run(&format!("cnot-speed-sweep T = {t}"), &point, audit);
        if r.fidelity() > 0.999 {
            reached = Some((t, r.fidelity()));
            break;
        }
    }
    let sweep = match reached {
        Some((t, f)) => format!("fidelity {f:.5} at T = {t} ns"),
        None => "no T in [26, 36] ns above 0.999".into(),
    };
    Outcome::new(
        limit_ok && reached.is_some(),
        format!("T_min = {t_min:.3} ns (need 24.95 +/- 0.05); {sweep}"),
    )
}

/// Largest first-iteration gradient difference between COCOA at maximal
/// `N_c` without the window and the unshaped chain.
fn grape_gap(n: usize) -> (f64, f64) {
    let scenario = Scenario {
        slices: n,
        ..two_level(max_harmonics(n), false)
    };
    let problem = scenario.problem().unwrap();
    let raw = scenario.initial_raw(&problem).unwrap();
    let g_cocoa = cocoa_graph(&problem, raw.clone())
        .unwrap()
        .gradient()
        .unwrap();
    let g_grape = grape_graph(&problem, raw).unwrap().gradient().unwrap();
    let diff = g_cocoa[0]
        .iter()
        .zip(&g_grape[0])
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = g_grape[0].iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    (diff, scale)
}

fn grape_limit() -> Outcome {
    let (diff, scale) = grape_gap(32);
    let (odd, _) = grape_gap(33);
    Outcome::new(
        diff < 1e-10,
        format!(
            "max gradient difference {diff:.2e} at N = 32, N_c = {} (gradient scale {scale:.2e}); {odd:.2e} at N = 33",
            max_harmonics(32)
        ),
    )
}

fn hygiene() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut check = |name: &str, err: f64, tol: f64| {
        if err.is_nan() || err >= tol {
            failures.push(format!("{name} {err:.1e}"));
        }
    };

    let n = 148;
    let s: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            (TAU * 3.0 * t).sin() + 0.4 * (TAU * 41.0 * t).cos() + 0.05 * (k % 7) as f64
        })
        .collect();
    let w: Vec<f64> = (0..n).map(|k| ((k * k) % 11) as f64 - 5.0).collect();
    let max_diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    };

    check(
        "dft round trip",
        max_diff(&idft(&dft(&s)).unwrap(), &s),
        1e-12,
    );
    let once = band_limit(&s, 5).unwrap();
    check(
        "band limit idempotence",
        max_diff(&band_limit(&once, 5).unwrap(), &once),
        1e-12,
    );
    let (a, b) = (1.7, -0.3);
    let mix: Vec<f64> = s.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
    let lhs = band_limit(&mix, 5).unwrap();
    let rhs: Vec<f64> = once
        .iter()
        .zip(band_limit(&w, 5).unwrap())
        .map(|(x, y)| a * x + b * y)
        .collect();
    check("band limit linearity", max_diff(&lhs, &rhs), 1e-12);

    let scenario = find_scenario("single-x").unwrap();
    let problem = scenario.problem().unwrap();
    let pulses: Vec<PwcSequence> = scenario
        .seed_samples(&problem)
        .unwrap()
        .into_iter()
        .map(|v| PwcSequence::new(v, problem.task.dt()).unwrap())
        .collect();
    check(
        "U_T unitarity",
        unitarity_error(&evolve(&problem.frame, &pulses).unwrap()),
        1e-10,
    );

    check(
        "identity fidelity",
        (gate_fidelity(&identity(4)) - 1.0).abs(),
        1e-15,
    );
    let v = cnot_target(&[0.3, -1.1, 0.7, 2.0, 0.1, -0.4]);
    check(
        "substitution fidelity",
        (gate_fidelity(&dagger(&v).dot(&v)) - 1.0).abs(),
        1e-15,
    );
    let phased = identity(4).mapv(|z| z * num_complex::Complex64::from_polar(1.0, 0.9));
    check(
        "global phase fidelity",
        (gate_fidelity(&phased) - 1.0).abs(),
        1e-15,
    );

    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    if failures.is_empty() {
        Outcome::new(true, format!("all checks within tolerance, {secs:.2} s"))
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn main() {
    let selected: Option<Vec<usize>> = std::env::var("QOC_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wants = |k: usize| selected.as_ref().is_none_or(|s| s.contains(&k));

    let mut audit = BandAudit::default();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    if wants(8) {
        results.push((8, "numerical hygiene", hygiene()));
    }
    if wants(1) {
        results.push((1, "gradient oracle", gradient_oracle()));
    }
    if wants(7) {
        results.push((7, "COCOA/GRAPE limit", grape_limit()));
    }
    let mut at_five = None;
    if wants(2) {
        let (outcome, infidelity) = single_x(&mut audit);
        at_five = Some(infidelity);
        results.push((2, "single-X", outcome));
    }
    if wants(3) {
        results.push((3, "dual-X", dual_x(&mut audit)));
    }
    if wants(5) {
        results.push((5, "N_c study", nc_study(&mut audit, at_five)));
    }
    if wants(6) {
        results.push((6, "speed limit", speed_limit(&mut audit)));
    }
    if wants(4) {
        let outcome = if audit.runs == 0 {
            Outcome::new(false, "no optimisation runs to audit")
        } else {
            Outcome::new(
                audit.worst < 1e-12,
                format!(
                    "worst out-of-band ratio {:.1e} over {} runs ({})",
                    audit.worst, audit.runs, audit.worst_run
                ),
            )
        };
        results.push((4, "band limit", outcome));
    }

    results.sort_by_key(|r| r.0);
    println!();
    for (k, name, outcome) in &results {
        println!(
            "criterion {k} ({name}): {} {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
