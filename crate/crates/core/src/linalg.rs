// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrix helpers shared by the tape and the device models.

use ndarray::Array2;
use num_complex::Complex64;

/// Dense complex matrix, row-major.
pub type CMat = Array2<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, ONE)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    Array2::zeros((n, m))
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Maximum absolute column sum.
pub fn norm1(m: &CMat) -> f64 {
    m.columns()
        .into_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diag().iter().sum()
}

/// `max |H - H^dagger|`.
pub fn hermiticity_error(m: &CMat) -> f64 {
    max_abs_diff(m, &dagger(m))
}

/// `max |U U^dagger - I|`.
pub fn unitarity_error(u: &CMat) -> f64 {
    max_abs_diff(&u.dot(&dagger(u)), &identity(u.nrows()))
}

/// Truncated-oscillator annihilation operator `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(levels: usize) -> CMat {
    let mut a = zeros(levels, levels);
    for n in 1..levels {
        a[[n - 1, n]] = c((n as f64).sqrt(), 0.0);
    }
    a
}

/// Embed a single-mode operator at position `site` of a tensor product with mode sizes `dims`.
pub fn embed(op: &CMat, site: usize, dims: &[usize]) -> CMat {
    dims.iter().enumerate().fold(identity(1), |acc, (k, &d)| {
        if k == site {
            kron(&acc, op)
        } else {
            kron(&acc, &identity(d))
        }
    })
}

pub fn pauli_x() -> CMat {
    ndarray::array![[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> CMat {
    ndarray::array![[ZERO, -I], [I, ZERO]]
}

pub fn pauli_z() -> CMat {
    ndarray::array![[ONE, ZERO], [ZERO, -ONE]]
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending, eigenvectors as columns.
///
/// Only used outside the tape (dressed states, test oracles).
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let na = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        // Symmetrise so round-off asymmetry never reaches the solver.
        (m[[i, j]] + m[[j, i]].conj()) * 0.5
    });
    let eig = nalgebra::SymmetricEigen::new(na);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}
