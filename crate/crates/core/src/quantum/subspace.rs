// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::linalg::{c, dagger, eigh, CMat};
use crate::{Error, Result};

/// Dressed eigenstates of a static Hamiltonian, each tagged with a bare label.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    /// Bare product-basis indices, one per column of `basis`.
    pub labels: Vec<usize>,
    /// Orthonormal dressed vectors as columns (dim x labels).
    pub basis: CMat,
    /// Eigenvalue of each dressed vector.
    pub energies: Vec<f64>,
    /// `|<bare|dressed>|^2` for each label.
    pub overlaps: Vec<f64>,
}

/// Assigns to each bare label the eigenvector of `h0` it overlaps most.
///
/// Pairs are taken greedily in order of decreasing overlap, each eigenvector at
/// most once; equal overlaps favour the lower eigenvalue. Every vector is phased
/// so its bare component is real and positive.
pub fn dressed_subspace(h0: &CMat, labels: &[usize]) -> Result<Subspace> {
    let (values, vectors) = eigh(h0);
    let n = values.len();
    let mut pairs: Vec<(f64, usize, usize)> = labels
        .iter()
        .enumerate()
        .flat_map(|(li, &bare)| (0..n).map(move |k| (li, bare, k)))
        .map(|(li, bare, k)| (vectors[[bare, k]].norm_sqr(), li, k))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)));

    let mut chosen: Vec<Option<(usize, f64)>> = vec![None; labels.len()];
    let mut used = vec![false; n];
    for (overlap, li, k) in pairs {
        if chosen[li].is_none() && !used[k] {
            chosen[li] = Some((k, overlap));
            used[k] = true;
        }
    }

    let mut basis = CMat::zeros((n, labels.len()));
    let mut energies = Vec::with_capacity(labels.len());
    let mut overlaps = Vec::with_capacity(labels.len());
    for (li, slot) in chosen.iter().enumerate() {
        let (k, overlap) = slot.expect("at least as many eigenvectors as labels");
        if overlap < 0.5 {
            return Err(Error::AmbiguousAssignment {
                label: labels[li],
                overlap,
            });
        }
        let phase = vectors[[labels[li], k]];
        let fix = phase.conj() / phase.norm();
        for i in 0..n {
            basis[[i, li]] = vectors[[i, k]] * fix;
        }
        energies.push(values[k]);
        overlaps.push(overlap);
    }
    Ok(Subspace {
        labels: labels.to_vec(),
        basis,
        energies,
        overlaps,
    })
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn projector(&self) -> CMat {
        self.basis.dot(&dagger(&self.basis))
    }

    /// `E[to] - E[from]` using positions in `labels`.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.energies[to] - self.energies[from]
    }

    /// Dressed state `basis[:, i]` as a column vector.
    pub fn state(&self, i: usize) -> CMat {
        let col = self.basis.column(i).to_owned();
        col.into_shape_with_order((self.basis.nrows(), 1)).unwrap()
    }
}

/// Bare-basis isometry for the given labels.
pub fn bare_subspace(dim: usize, labels: &[usize]) -> Subspace {
    let mut basis = CMat::zeros((dim, labels.len()));
    for (li, &b) in labels.iter().enumerate() {
        basis[[b, li]] = c(1.0, 0.0);
    }
    Subspace {
        labels: labels.to_vec(),
        basis,
        energies: vec![0.0; labels.len()],
        overlaps: vec![1.0; labels.len()],
    }
}
