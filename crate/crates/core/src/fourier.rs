// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Direct O(N^2) discrete Fourier kernels.
//!
//! Forward transform uses the negative exponent, `X[m] = sum_k s[k] e^{-2 pi i m k / N}`;
//! the inverse carries the `1/N`. Twiddles are indexed by `(m k) mod N` so that
//! conjugate-symmetric bins see bit-identical factors.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Tolerance on conjugate symmetry (and on the discarded imaginary residue) of real spectra.
pub const HERMITIAN_TOL: f64 = 1e-9;

fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64))
        .collect()
}

pub fn dft_real(s: &[f64]) -> Vec<Complex64> {
    let n = s.len();
    let w = twiddles(n, -1.0);
    (0..n)
        .map(|m| s.iter().enumerate().map(|(k, &x)| w[(m * k) % n] * x).sum())
        .collect()
}

/// Unnormalised transform with positive exponent: `sum_m x[m] e^{+2 pi i m k / N}`.
pub fn dft_conj(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let w = twiddles(n, 1.0);
    (0..n)
        .map(|k| x.iter().enumerate().map(|(m, &v)| w[(m * k) % n] * v).sum())
        .collect()
}

/// Unnormalised transform with negative exponent on complex input.
pub fn dft_complex(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let w = twiddles(n, -1.0);
    (0..n)
        .map(|m| x.iter().enumerate().map(|(k, &v)| w[(m * k) % n] * v).sum())
        .collect()
}

pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let scale = 1.0 / x.len() as f64;
    dft_conj(x).into_iter().map(|z| z * scale).collect()
}

/// `max_m |X[N-m] - conj(X[m])|`, plus `|Im X[0]|` (and the Nyquist bin for even N).
pub fn hermitian_deviation(x: &[Complex64]) -> f64 {
    let n = x.len();
    (0..n)
        .map(|m| (x[(n - m) % n] - x[m].conj()).norm())
        .fold(0.0, f64::max)
}

/// Symmetry tolerance scaled to the spectrum's magnitude.
pub fn hermitian_tolerance(x: &[Complex64]) -> f64 {
    let peak = x.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    HERMITIAN_TOL * peak.max(1.0)
}

/// Indices retained by a cutoff of `nc` harmonics: `{0..=nc} ∪ {N-nc..N-1}`.
pub fn band_mask(n: usize, nc: usize) -> Vec<bool> {
    (0..n).map(|m| m <= nc || m >= n - nc).collect()
}

/// Largest admissible harmonic count, `floor((N-1)/2)`.
pub fn max_harmonics(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_keeps_dc_and_mirrors() {
        let m = band_mask(8, 2);
        assert_eq!(m, vec![true, true, true, false, false, false, true, true]);
        let only_dc = band_mask(8, 0);
        assert_eq!(only_dc.iter().filter(|&&b| b).count(), 1);
    }

    #[test]
    fn max_harmonics_floors() {
        assert_eq!(max_harmonics(148), 73);
        assert_eq!(max_harmonics(200), 99);
        assert_eq!(max_harmonics(32), 15);
        assert_eq!(max_harmonics(33), 16);
    }

    #[test]
    fn real_input_is_conjugate_symmetric() {
        let s: Vec<f64> = (0..11)
            .map(|k| (k as f64 * 0.7).sin() + 0.1 * k as f64)
            .collect();
        let x = dft_real(&s);
        assert!(hermitian_deviation(&x) < 1e-12);
    }
}
