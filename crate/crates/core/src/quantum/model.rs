// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::linalg::{annihilation, c, dagger, embed, CMat};
use crate::{Error, Result};

/// A truncated anharmonic oscillator. Frequencies in rad/ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub levels: usize,
    pub frequency: f64,
    pub anharmonicity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingForm {
    /// `g (a^dag b + a b^dag)`.
    Exchange,
    /// `g (a^dag + a)(b^dag + b)`.
    FullQuadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub strength: f64,
    pub form: CouplingForm,
}

/// Microwave drive on one mode, `Omega(t) (a e^{i w t} + a^dag e^{-i w t})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub mode: usize,
    pub frequency: f64,
}

/// Coupled oscillators. By convention modes 0 and 1 are the two qubits;
/// further modes (a bus cavity) stay in their ground state in every label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub modes: Vec<Mode>,
    pub couplings: Vec<Coupling>,
    pub drives: Vec<Drive>,
}

/// Two directly coupled transmons, `g (a1^dag + a1)(a2^dag + a2)`.
pub fn build_model1(
    w1: f64,
    w2: f64,
    a1: f64,
    a2: f64,
    g12: f64,
    levels: usize,
) -> Result<DeviceModel> {
    if levels < 2 {
        return Err(Error::InvalidLevels(levels));
    }
    Ok(DeviceModel {
        modes: vec![
            Mode {
                levels,
                frequency: w1,
                anharmonicity: a1,
            },
            Mode {
                levels,
                frequency: w2,
                anharmonicity: a2,
            },
        ],
        couplings: vec![Coupling {
            a: 0,
            b: 1,
            strength: g12,
            form: CouplingForm::FullQuadrature,
        }],
        drives: Vec::new(),
    })
}

/// Two transmons sharing a bus cavity (mode 2) through exchange couplings.
#[allow(clippy::too_many_arguments)]
pub fn build_model2(
    w1: f64,
    w2: f64,
    wc: f64,
    a1: f64,
    a2: f64,
    gc1: f64,
    gc2: f64,
    qubit_levels: usize,
    cavity_levels: usize,
) -> Result<DeviceModel> {
    for levels in [qubit_levels, cavity_levels] {
        if levels < 2 {
            return Err(Error::InvalidLevels(levels));
        }
    }
    Ok(DeviceModel {
        modes: vec![
            Mode {
                levels: qubit_levels,
                frequency: w1,
                anharmonicity: a1,
            },
            Mode {
                levels: qubit_levels,
                frequency: w2,
                anharmonicity: a2,
            },
            Mode {
                levels: cavity_levels,
                frequency: wc,
                anharmonicity: 0.0,
            },
        ],
        couplings: vec![
            Coupling {
                a: 0,
                b: 2,
                strength: gc1,
                form: CouplingForm::Exchange,
            },
            Coupling {
                a: 1,
                b: 2,
                strength: gc2,
                form: CouplingForm::Exchange,
            },
        ],
        drives: Vec::new(),
    })
}

impl DeviceModel {
    pub fn with_drive(mut self, mode: usize, frequency: f64) -> Self {
        self.drives.retain(|d| d.mode != mode);
        self.drives.push(Drive { mode, frequency });
        self.drives.sort_by_key(|d| d.mode);
        self
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.levels).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn lowering(&self, mode: usize) -> CMat {
        embed(&annihilation(self.modes[mode].levels), mode, &self.dims())
    }

    /// Diagonal of `a^dag a` for `mode` in the product basis.
    pub fn occupation(&self, mode: usize) -> Vec<f64> {
        let dims = self.dims();
        (0..self.dim())
            .map(|i| self.digits(i, &dims)[mode] as f64)
            .collect()
    }

    fn digits(&self, mut index: usize, dims: &[usize]) -> Vec<usize> {
        let mut out = vec![0; dims.len()];
        for (slot, &d) in out.iter_mut().zip(dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Product-basis index of the occupation pattern `n`, padding missing modes with 0.
    pub fn bare_index(&self, n: &[usize]) -> usize {
        self.modes.iter().enumerate().fold(0, |acc, (k, m)| {
            acc * m.levels + n.get(k).copied().unwrap_or(0)
        })
    }

    /// Bare indices of `|00>, |01>, |10>, |11>` (first digit = mode 0).
    pub fn computational_labels(&self) -> [usize; 4] {
        [[0, 0], [0, 1], [1, 0], [1, 1]].map(|n| self.bare_index(&n))
    }

    /// Oscillator and anharmonic terms in a frame rotating at `frame[j]` per mode.
    pub(crate) fn local_terms(&self, frame: &[f64]) -> CMat {
        let n = self.dim();
        let mut h = CMat::zeros((n, n));
        for (j, mode) in self.modes.iter().enumerate() {
            let occ = self.occupation(j);
            let detuning = mode.frequency - frame[j];
            for (i, &k) in occ.iter().enumerate() {
                h[[i, i]] += c(detuning * k + 0.5 * mode.anharmonicity * k * (k - 1.0), 0.0);
            }
        }
        h
    }

    /// Static lab-frame Hamiltonian, couplings as specified.
    pub fn lab_hamiltonian(&self) -> CMat {
        self.static_hamiltonian(false)
    }

    /// Static lab-frame Hamiltonian with every coupling in exchange form.
    pub fn rwa_hamiltonian(&self) -> CMat {
        self.static_hamiltonian(true)
    }

    fn static_hamiltonian(&self, rwa: bool) -> CMat {
        let mut h = self.local_terms(&vec![0.0; self.modes.len()]);
        for cp in &self.couplings {
            let (a, b) = (self.lowering(cp.a), self.lowering(cp.b));
            let exchange = dagger(&a).dot(&b);
            let exchange = &exchange + &dagger(&exchange);
            let term = match (cp.form, rwa) {
                (CouplingForm::Exchange, _) | (CouplingForm::FullQuadrature, true) => exchange,
                (CouplingForm::FullQuadrature, false) => {
                    (&a + &dagger(&a)).dot(&(&b + &dagger(&b)))
                }
            };
            h = h + term * c(cp.strength, 0.0);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, hermiticity_error, max_abs};
    use crate::units::{ghz, mhz};

    fn reference_model1() -> DeviceModel {
        build_model1(ghz(5.27), ghz(4.67), mhz(-220.0), mhz(-220.0), mhz(25.4), 4).unwrap()
    }

    #[test]
    fn model1_dimension_and_hermiticity() {
        let m = reference_model1();
        let h = m.lab_hamiltonian();
        assert_eq!(h.dim(), (16, 16));
        assert!(hermiticity_error(&h) < 1e-12);
        let (_, v) = eigh(&h);
        assert!(v[[0, 0]].norm_sqr() > 0.99);
    }

    #[test]
    fn decoupled_linear_spectrum() {
        let m = build_model1(1.3, 0.7, 0.0, 0.0, 0.0, 3).unwrap();
        let (w, _) = eigh(&m.lab_hamiltonian());
        let mut expected: Vec<f64> = (0..3)
            .flat_map(|a| (0..3).map(move |b| a as f64 * 1.3 + b as f64 * 0.7))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (x, y) in w.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_single_level() {
        assert!(matches!(
            build_model1(1.0, 1.0, 0.0, 0.0, 0.0, 1),
            Err(Error::InvalidLevels(1))
        ));
        assert!(build_model2(1.0, 1.0, 1.0, 0.0, 0.0, 0.1, 0.1, 3, 1).is_err());
    }

    #[test]
    fn model2_hermitian_and_excitation_conserving() {
        let m = build_model2(
            ghz(6.2),
            ghz(6.8),
            ghz(7.15),
            mhz(-350.0),
            mhz(-350.0),
            mhz(250.0),
            mhz(250.0),
            3,
            3,
        )
        .unwrap();
        assert!(hermiticity_error(&m.lab_hamiltonian()) < 1e-12);

        let linear = build_model2(
            ghz(6.2),
            ghz(6.8),
            ghz(7.15),
            0.0,
            0.0,
            mhz(250.0),
            mhz(250.0),
            3,
            3,
        )
        .unwrap();
        let h = linear.lab_hamiltonian();
        let total: Vec<f64> = (0..3)
            .map(|j| linear.occupation(j))
            .fold(vec![0.0; h.nrows()], |acc, o| {
                acc.iter().zip(o).map(|(a, b)| a + b).collect()
            });
        let n = CMat::from_diag(&ndarray::Array1::from_iter(
            total.iter().map(|&x| c(x, 0.0)),
        ));
        let comm = h.dot(&n) - n.dot(&h);
        assert!(max_abs(&comm) < 1e-12);
    }

    #[test]
    fn model2_uncoupled_sectors_separate() {
        let m = build_model2(1.0, 1.1, 1.2, -0.1, -0.1, 0.0, 0.0, 2, 2).unwrap();
        let h = m.lab_hamiltonian();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                if i != j {
                    assert_eq!(h[[i, j]].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn labels_follow_mode_order() {
        let m = build_model2(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 3, 2).unwrap();
        assert_eq!(m.computational_labels(), [0, 2, 6, 8]);
        assert_eq!(m.occupation(1)[2], 1.0);
    }
}
