// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use num_complex::Complex64;

use super::*;
use crate::fourier::band_mask;
use crate::linalg::{c, zeros, CMat};

fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

fn random_matrix(n: usize, next: &mut impl FnMut() -> f64) -> CMat {
    let mut m = zeros(n, n);
    m.iter_mut().for_each(|z| *z = c(next(), next()));
    m
}

/// Matrix `sum_i x_i A_i` built from the entries of a vector leaf.
fn matrix_of(tape: &mut Tape, x: Var, n: usize, seed: u64) -> Var {
    let mut next = lcg(seed);
    let len = tape.vector(x).len();
    let terms = (0..len)
        .map(|i| {
            let e = tape.vec_element(x, i).unwrap();
            (e, Arc::new(random_matrix(n, &mut next)))
        })
        .collect();
    tape.lin_comb(c(1.0, 0.0), None, terms).unwrap()
}

/// Real scalar `Re Tr(W X) + Im Tr(V X)` for fixed random `W`, `V`.
fn project(tape: &mut Tape, m: Var, seed: u64) -> Var {
    let n = tape.matrix(m).nrows();
    let mut next = lcg(seed);
    let w = Arc::new(random_matrix(n, &mut next));
    let v = Arc::new(random_matrix(n, &mut next));
    let a = tape.const_matmul(w, m).unwrap();
    let b = tape.const_matmul(v, m).unwrap();
    let ta = tape.trace(a).unwrap();
    let tb = tape.trace(b).unwrap();
    let ra = tape.re(ta).unwrap();
    let ib = tape.im(tb).unwrap();
    tape.add(ra, ib).unwrap()
}

fn param_vec(len: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut next = lcg(seed);
    (0..len).map(|_| scale * next()).collect()
}

#[test]
fn square_derivative() {
    let mut tape = Tape::new();
    let x = tape.param(3.0);
    let y = tape.mul(x, x).unwrap();
    let g = tape.backward(y).unwrap();
    assert_eq!(g.real(x), Some(6.0));
}

#[test]
fn sum_of_squares_is_exact() {
    let mut tape = Tape::new();
    let x = tape.param(vec![1.0, 2.0, 3.0]);
    let y = tape.sum_squares(x).unwrap();
    let err = check_gradient(&mut tape, y, x, 1e-5).unwrap();
    assert!(err < 1e-9, "{err:e}");
}

#[test]
fn constant_output_has_zero_gradient() {
    let mut tape = Tape::new();
    let x = tape.param(vec![0.5, -1.0]);
    let k = tape.constant(4.0);
    let y = tape.scale(k, 2.0).unwrap();
    let g = tape.backward(y).unwrap();
    assert_eq!(g.vector(x), Some(&[0.0, 0.0][..]));
    assert_eq!(check_gradient(&mut tape, y, x, 1e-5).unwrap(), 0.0);
}

#[test]
fn backward_rejects_non_scalar() {
    let mut tape = Tape::new();
    let x = tape.param(vec![1.0]);
    assert!(matches!(tape.backward(x), Err(AdError::NonScalarOutput(_))));
}

#[test]
fn backward_is_repeatable_and_leaves_tape_untouched() {
    let mut tape = Tape::new();
    let x = tape.param(vec![0.3, -0.2, 0.1, 0.4]);
    let m = matrix_of(&mut tape, x, 3, 5);
    let e = tape.expm(m).unwrap();
    let y = project(&mut tape, e, 6);
    let before = tape.real(y);
    let g1 = tape.backward(y).unwrap();
    let g2 = tape.backward(y).unwrap();
    assert_eq!(g1, g2);
    assert_eq!(tape.real(y).to_bits(), before.to_bits());
}

#[test]
fn forward_replay_is_bit_identical() {
    let mut tape = Tape::new();
    let x = tape.param(vec![0.3, -0.2, 0.1]);
    let m = matrix_of(&mut tape, x, 4, 1);
    let e = tape.expm(m).unwrap();
    let y = project(&mut tape, e, 2);
    let recorded = tape.real(y);
    tape.forward().unwrap();
    assert_eq!(tape.real(y).to_bits(), recorded.to_bits());
}

#[test]
fn set_leaf_checks_kind_and_shape() {
    let mut tape = Tape::new();
    let x = tape.param(vec![1.0, 2.0]);
    let y = tape.sum_squares(x).unwrap();
    assert!(matches!(tape.set_leaf(y, 1.0), Err(AdError::NotALeaf(_))));
    assert!(matches!(
        tape.set_leaf(x, vec![1.0]),
        Err(AdError::LeafShape { .. })
    ));
    tape.set_leaf(x, vec![3.0, 4.0]).unwrap();
    tape.forward().unwrap();
    assert_eq!(tape.real(y), 25.0);
}

#[test]
fn expm_rejects_bad_input() {
    let mut tape = Tape::new();
    let m = tape.constant(CMat::zeros((2, 3)));
    assert!(matches!(tape.expm(m), Err(AdError::NonSquare(2, 3))));
    let mut bad = zeros(2, 2);
    bad[[0, 1]] = c(f64::NAN, 0.0);
    let m = tape.constant(bad);
    assert!(matches!(tape.expm(m), Err(AdError::NonFinite { .. })));
}

#[test]
fn idft_rejects_asymmetric_spectrum() {
    let mut tape = Tape::new();
    let x = tape.param(vec![1.0, 2.0, 3.0, 4.0]);
    let s = tape.dft(x).unwrap();
    // Masking a single mirror bin breaks conjugate symmetry.
    let keep = Arc::new(vec![true, true, true, false]);
    let masked = tape.spectrum_mask(s, keep).unwrap();
    assert!(matches!(
        tape.idft_real(masked),
        Err(AdError::NonHermitianSpectrum { .. })
    ));
}

#[test]
fn scalar_primitives() {
    let mut tape = Tape::new();
    let x = tape.param(0.7);
    let y = tape.param(-0.4);
    let s = tape.sin(x).unwrap();
    let co = tape.cos(y).unwrap();
    let p = tape.mul(s, co).unwrap();
    let e = tape.exp(y).unwrap();
    let sg = tape.sigmoid(x).unwrap();
    let q = tape.sub(e, sg).unwrap();
    let r = tape.add(p, q).unwrap();
    let r = tape.offset(r, 1.5).unwrap();
    let out = tape.scale(r, -2.0).unwrap();
    for leaf in [x, y] {
        let err = check_gradient(&mut tape, out, leaf, 1e-6).unwrap();
        assert!(err < 1e-8, "{err:e}");
    }
}

#[test]
fn vector_primitives() {
    let mut tape = Tape::new();
    let x = tape.param(param_vec(7, 3, 1.0));
    let y = tape.param(param_vec(7, 4, 1.0));
    let a = tape.vec_affine(x, 1.7, -0.2).unwrap();
    let s = tape.vec_sigmoid(a).unwrap();
    let t = tape.vec_tanh(y).unwrap();
    let e = tape.vec_exp(x).unwrap();
    let m = tape.vec_mul(s, t).unwrap();
    let w = tape
        .vec_mul_const(e, Arc::new(param_vec(7, 5, 1.0)))
        .unwrap();
    let z = tape.vec_add(m, w).unwrap();
    let k = tape.vec_element(z, 2).unwrap();
    let sq = tape.sum_squares(z).unwrap();
    let su = tape.vec_sum(z).unwrap();
    let out = tape.mul(sq, su).unwrap();
    let out = tape.add(out, k).unwrap();
    for leaf in [x, y] {
        let err = check_gradient(&mut tape, out, leaf, 1e-6).unwrap();
        assert!(err < 1e-6, "{err:e}");
    }
}

#[test]
fn spectral_primitives() {
    for n in [9usize, 12] {
        let mut tape = Tape::new();
        let x = tape.param(param_vec(n, n as u64, 1.0));
        let s = tape.dft(x).unwrap();
        let m = tape.spectrum_mask(s, Arc::new(band_mask(n, 2))).unwrap();
        let y = tape.idft_real(m).unwrap();
        let w = tape
            .vec_mul_const(y, Arc::new(param_vec(n, 77, 1.0)))
            .unwrap();
        let t = tape.vec_tanh(w).unwrap();
        let out = tape.sum_squares(t).unwrap();
        let err = check_gradient(&mut tape, out, x, 1e-6).unwrap();
        assert!(err < 1e-6, "n={n}: {err:e}");
    }
}

#[test]
fn matrix_primitives() {
    let n = 3;
    let mut tape = Tape::new();
    let x = tape.param(param_vec(4, 9, 0.5));
    let a = matrix_of(&mut tape, x, n, 10);
    let b = matrix_of(&mut tape, x, n, 11);
    let ab = tape.matmul(a, b).unwrap();
    let ah = tape.adjoint(a).unwrap();
    let sum = tape.mat_add(ab, ah).unwrap();
    let sc = tape.mat_scale(sum, c(0.3, -0.7)).unwrap();
    let mut next = lcg(12);
    let k = Arc::new(random_matrix(n, &mut next));
    let r = tape.matmul_const(sc, k).unwrap();
    let fro = tape.frobenius_sq(r).unwrap();
    let tr = tape.trace(r).unwrap();
    let ab2 = tape.abs2(tr).unwrap();
    let ab1 = tape.abs(tr).unwrap();
    let p = project(&mut tape, r, 13);
    let s1 = tape.add(fro, ab2).unwrap();
    let s2 = tape.add(ab1, p).unwrap();
    let out = tape.add(s1, s2).unwrap();
    let err = check_gradient(&mut tape, out, x, 1e-6).unwrap();
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn lin_comb_with_base_and_factor() {
    let n = 3;
    let mut next = lcg(21);
    let base = Arc::new(random_matrix(n, &mut next));
    let mut tape = Tape::new();
    let x = tape.param(param_vec(2, 22, 1.0));
    let e0 = tape.vec_element(x, 0).unwrap();
    let e1 = tape.vec_element(x, 1).unwrap();
    let terms = vec![
        (e0, Arc::new(random_matrix(n, &mut next))),
        (e1, Arc::new(random_matrix(n, &mut next))),
    ];
    let m = tape.lin_comb(c(0.0, -0.4), Some(base), terms).unwrap();
    let out = project(&mut tape, m, 23);
    let err = check_gradient(&mut tape, out, x, 1e-6).unwrap();
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn expm_node_gradient() {
    for (dim, scale) in [(2usize, 0.3), (4, 1.0), (6, 2.0)] {
        let mut tape = Tape::new();
        let x = tape.param(param_vec(5, dim as u64, scale));
        let m = matrix_of(&mut tape, x, dim, 40 + dim as u64);
        let e = tape.expm(m).unwrap();
        let out = project(&mut tape, e, 50);
        let err = check_gradient(&mut tape, out, x, 1e-5).unwrap();
        assert!(err < 1e-6, "dim {dim}: {err:e}");
    }
}

#[test]
fn linearity_of_backward() {
    let mut tape = Tape::new();
    let x = tape.param(param_vec(4, 60, 0.5));
    let m = matrix_of(&mut tape, x, 3, 61);
    let e = tape.expm(m).unwrap();
    let f = project(&mut tape, e, 62);
    let g = tape.frobenius_sq(m).unwrap();
    let (alpha, beta) = (1.3, -0.6);
    let fa = tape.scale(f, alpha).unwrap();
    let gb = tape.scale(g, beta).unwrap();
    let h = tape.add(fa, gb).unwrap();
    let gf = tape.backward(f).unwrap();
    let gg = tape.backward(g).unwrap();
    let gh = tape.backward(h).unwrap();
    let (vf, vg, vh) = (
        gf.vector(x).unwrap(),
        gg.vector(x).unwrap(),
        gh.vector(x).unwrap(),
    );
    for i in 0..4 {
        assert!((vh[i] - (alpha * vf[i] + beta * vg[i])).abs() < 1e-12);
    }
}

#[test]
fn gradients_cover_every_param_leaf() {
    let mut tape = Tape::new();
    let a = tape.param(1.0);
    let b = tape.param(Complex64::new(1.0, 2.0));
    let _k = tape.constant(5.0);
    let y = tape.scale(a, 2.0).unwrap();
    let g = tape.backward(y).unwrap();
    assert_eq!(g.len(), 2);
    assert_eq!(g.get(b), Some(&Value::Complex(Complex64::new(0.0, 0.0))));
    assert!((g.norm() - 2.0).abs() < 1e-15);
}

#[test]
fn clamp_and_linear_map() {
    let mut tape = Tape::new();
    let x = tape.param(vec![0.3, -0.7, 0.1]);
    let mut next = lcg(80);
    let a = ndarray::Array2::from_shape_fn((5, 3), |_| next());
    let y = tape.linear_map(x, Arc::new(a)).unwrap();
    let z = tape.vec_clamp(y, -0.4, 0.4).unwrap();
    let out = tape.sum_squares(z).unwrap();
    let inside = tape.vector(y).iter().filter(|v| v.abs() < 0.4).count();
    assert!(
        inside > 0 && inside < 5,
        "want both regimes, got {inside} inside"
    );
    let err = check_gradient(&mut tape, out, x, 1e-6).unwrap();
    assert!(err < 1e-8, "{err:e}");
}
