// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Wengert-list tape over real scalars, real vectors and complex matrices.
//!
//! Complex quantities are differentiated as pairs of independent real numbers.
//! The adjoint stored for a complex node `z = x + iy` is `dL/dx + i dL/dy`, so
//! for `Z = A B` the pull-back is `A' = Z' B^H`, `B' = A^H Z'`.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::matexp::{expm_adjoint, expm_traced, ExpmTrace};
use super::value::{Shape, Value};
use super::AdError;
use crate::fourier;
use crate::linalg::{dagger, identity, CMat};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf {
        requires_grad: bool,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Offset(Var, f64),
    Sin(Var),
    Cos(Var),
    Exp(Var),
    Sigmoid(Var),
    VecAffine {
        x: Var,
        scale: f64,
        shift: f64,
    },
    VecSigmoid(Var),
    VecExp(Var),
    VecTanh(Var),
    VecAdd(Var, Var),
    VecMul(Var, Var),
    VecMulConst {
        x: Var,
        weights: Arc<Vec<f64>>,
    },
    VecElement {
        x: Var,
        index: usize,
    },
    VecClamp {
        x: Var,
        lower: f64,
        upper: f64,
    },
    LinearMap {
        x: Var,
        map: Arc<Array2<f64>>,
    },
    VecSum(Var),
    SumSquares(Var),
    Dft(Var),
    SpectrumMask {
        x: Var,
        keep: Arc<Vec<bool>>,
    },
    IdftReal(Var),
    LinComb {
        factor: Complex64,
        base: Option<Arc<CMat>>,
        terms: Vec<(Var, Arc<CMat>)>,
    },
    MatMul(Var, Var),
    ConstMatMul {
        left: Arc<CMat>,
        x: Var,
    },
    MatMulConst {
        x: Var,
        right: Arc<CMat>,
    },
    MatAdd(Var, Var),
    MatScale(Var, Complex64),
    Adjoint(Var),
    Trace(Var),
    FrobeniusSq(Var),
    Abs2(Var),
    Abs(Var),
    Re(Var),
    Im(Var),
    Expm(Var),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Value,
    expm: Option<Box<ExpmTrace>>,
}

/// Record of primitive operations, in topological order.
///
/// Nodes are appended as they are computed, so every operand precedes its
/// consumer. [`Tape::forward`] re-evaluates the recorded graph after leaf
/// values change; [`Tape::backward`] is read-only.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Partial derivatives of a scalar output with respect to every gradient-enabled leaf.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    map: BTreeMap<Var, Value>,
}

impl Gradients {
    pub fn get(&self, leaf: Var) -> Option<&Value> {
        self.map.get(&leaf)
    }

    pub fn real(&self, leaf: Var) -> Option<f64> {
        self.get(leaf).and_then(Value::as_real)
    }

    pub fn vector(&self, leaf: Var) -> Option<&[f64]> {
        self.get(leaf).and_then(Value::as_vector)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Euclidean norm over all components (complex entries count real and imaginary parts).
    pub fn norm(&self) -> f64 {
        self.map
            .values()
            .map(|v| match v {
                Value::Real(x) => x * x,
                Value::Complex(z) => z.norm_sqr(),
                Value::Vector(v) => v.iter().map(|x| x * x).sum(),
                Value::CVector(v) => v.iter().map(|z| z.norm_sqr()).sum(),
                Value::Matrix(m) => m.iter().map(|z| z.norm_sqr()).sum(),
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn shape_err(op: &'static str, expected: &'static str, found: Shape) -> AdError {
    AdError::ShapeMismatch {
        op,
        expected,
        found,
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Value {
        &self.nodes[v.0].value
    }

    pub fn real(&self, v: Var) -> f64 {
        self.value(v).as_real().expect("node is not a real scalar")
    }

    pub fn vector(&self, v: Var) -> &[f64] {
        self.value(v)
            .as_vector()
            .expect("node is not a real vector")
    }

    pub fn matrix(&self, v: Var) -> &CMat {
        self.value(v).as_matrix().expect("node is not a matrix")
    }

    pub fn is_leaf(&self, v: Var) -> bool {
        matches!(self.nodes[v.0].op, Op::Leaf { .. })
    }

    /// Independent variable that receives a gradient.
    pub fn param(&mut self, value: impl Into<Value>) -> Var {
        self.push_leaf(value.into(), true)
    }

    /// Leaf excluded from differentiation.
    pub fn constant(&mut self, value: impl Into<Value>) -> Var {
        self.push_leaf(value.into(), false)
    }

    fn push_leaf(&mut self, value: Value, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf { requires_grad },
            value,
            expm: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Replaces a leaf's value. Call [`Tape::forward`] afterwards to refresh dependents.
    pub fn set_leaf(&mut self, leaf: Var, value: impl Into<Value>) -> Result<(), AdError> {
        let value = value.into();
        let node = &mut self.nodes[leaf.0];
        if !matches!(node.op, Op::Leaf { .. }) {
            return Err(AdError::NotALeaf(leaf.0));
        }
        if node.value.shape() != value.shape() {
            return Err(AdError::LeafShape {
                expected: node.value.shape(),
                found: value.shape(),
            });
        }
        node.value = value;
        Ok(())
    }

    /// Re-evaluates every non-leaf node in recording order.
    pub fn forward(&mut self) -> Result<(), AdError> {
        for i in 0..self.nodes.len() {
            if matches!(self.nodes[i].op, Op::Leaf { .. }) {
                continue;
            }
            let (value, trace) = self.compute(&self.nodes[i].op)?;
            let node = &mut self.nodes[i];
            node.value = value;
            node.expm = trace;
        }
        Ok(())
    }

    fn push(&mut self, op: Op) -> Result<Var, AdError> {
        let (value, expm) = self.compute(&op)?;
        self.nodes.push(Node { op, value, expm });
        Ok(Var(self.nodes.len() - 1))
    }

    fn real_of(&self, v: Var, op: &'static str) -> Result<f64, AdError> {
        let val = self.value(v);
        val.as_real()
            .ok_or_else(|| shape_err(op, "real scalar", val.shape()))
    }

    fn complex_of(&self, v: Var, op: &'static str) -> Result<Complex64, AdError> {
        let val = self.value(v);
        val.as_complex()
            .ok_or_else(|| shape_err(op, "complex scalar", val.shape()))
    }

    fn vec_of(&self, v: Var, op: &'static str) -> Result<&[f64], AdError> {
        let val = self.value(v);
        val.as_vector()
            .ok_or_else(|| shape_err(op, "real vector", val.shape()))
    }

    fn cvec_of(&self, v: Var, op: &'static str) -> Result<&[Complex64], AdError> {
        let val = self.value(v);
        val.as_cvector()
            .ok_or_else(|| shape_err(op, "complex vector", val.shape()))
    }

    fn mat_of(&self, v: Var, op: &'static str) -> Result<&CMat, AdError> {
        let val = self.value(v);
        val.as_matrix()
            .ok_or_else(|| shape_err(op, "complex matrix", val.shape()))
    }

    fn same_len(&self, a: &[f64], b: &[f64], op: &'static str) -> Result<(), AdError> {
        if a.len() != b.len() {
            return Err(AdError::LengthMismatch {
                op,
                left: a.len(),
                right: b.len(),
            });
        }
        Ok(())
    }

    fn compute(&self, op: &Op) -> Result<(Value, Option<Box<ExpmTrace>>), AdError> {
        let value = match op {
            Op::Leaf { .. } => unreachable!("leaves are never recomputed"),
            Op::Add(a, b) => Value::Real(self.real_of(*a, "add")? + self.real_of(*b, "add")?),
            Op::Sub(a, b) => Value::Real(self.real_of(*a, "sub")? - self.real_of(*b, "sub")?),
            Op::Mul(a, b) => Value::Real(self.real_of(*a, "mul")? * self.real_of(*b, "mul")?),
            Op::Scale(a, k) => Value::Real(k * self.real_of(*a, "scale")?),
            Op::Offset(a, k) => Value::Real(k + self.real_of(*a, "offset")?),
            Op::Sin(a) => Value::Real(self.real_of(*a, "sin")?.sin()),
            Op::Cos(a) => Value::Real(self.real_of(*a, "cos")?.cos()),
            Op::Exp(a) => Value::Real(self.real_of(*a, "exp")?.exp()),
            Op::Sigmoid(a) => Value::Real(sigmoid(self.real_of(*a, "sigmoid")?)),
            Op::VecAffine { x, scale, shift } => Value::Vector(
                self.vec_of(*x, "vec_affine")?
                    .iter()
                    .map(|v| scale * v + shift)
                    .collect(),
            ),
            Op::VecSigmoid(x) => Value::Vector(
                self.vec_of(*x, "vec_sigmoid")?
                    .iter()
                    .map(|&v| sigmoid(v))
                    .collect(),
            ),
            Op::VecExp(x) => Value::Vector(
                self.vec_of(*x, "vec_exp")?
                    .iter()
                    .map(|v| v.exp())
                    .collect(),
            ),
            Op::VecTanh(x) => Value::Vector(
                self.vec_of(*x, "vec_tanh")?
                    .iter()
                    .map(|v| v.tanh())
                    .collect(),
            ),
            Op::VecAdd(a, b) => {
                let (a, b) = (self.vec_of(*a, "vec_add")?, self.vec_of(*b, "vec_add")?);
                self.same_len(a, b, "vec_add")?;
                Value::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            Op::VecMul(a, b) => {
                let (a, b) = (self.vec_of(*a, "vec_mul")?, self.vec_of(*b, "vec_mul")?);
                self.same_len(a, b, "vec_mul")?;
                Value::Vector(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            Op::VecMulConst { x, weights } => {
                let x = self.vec_of(*x, "vec_mul_const")?;
                self.same_len(x, weights, "vec_mul_const")?;
                Value::Vector(x.iter().zip(weights.iter()).map(|(a, w)| a * w).collect())
            }
            Op::VecElement { x, index } => {
                let x = self.vec_of(*x, "vec_element")?;
                Value::Real(*x.get(*index).ok_or(AdError::IndexOutOfRange {
                    index: *index,
                    len: x.len(),
                })?)
            }
            Op::VecClamp { x, lower, upper } => Value::Vector(
                self.vec_of(*x, "vec_clamp")?
                    .iter()
                    .map(|v| v.clamp(*lower, *upper))
                    .collect(),
            ),
            Op::LinearMap { x, map } => {
                let x = self.vec_of(*x, "linear_map")?;
                if map.ncols() != x.len() {
                    return Err(AdError::LengthMismatch {
                        op: "linear_map",
                        left: map.ncols(),
                        right: x.len(),
                    });
                }
                Value::Vector(map.dot(&Array1::from(x.to_vec())).to_vec())
            }
            Op::VecSum(x) => Value::Real(self.vec_of(*x, "vec_sum")?.iter().sum()),
            Op::SumSquares(x) => {
                Value::Real(self.vec_of(*x, "sum_squares")?.iter().map(|v| v * v).sum())
            }
            Op::Dft(x) => Value::CVector(fourier::dft_real(self.vec_of(*x, "dft")?)),
            Op::SpectrumMask { x, keep } => {
                let x = self.cvec_of(*x, "spectrum_mask")?;
                if x.len() != keep.len() {
                    return Err(AdError::LengthMismatch {
                        op: "spectrum_mask",
                        left: x.len(),
                        right: keep.len(),
                    });
                }
                Value::CVector(
                    x.iter()
                        .zip(keep.iter())
                        .map(|(&z, &k)| if k { z } else { Complex64::new(0.0, 0.0) })
                        .collect(),
                )
            }
            Op::IdftReal(x) => {
                let x = self.cvec_of(*x, "idft_real")?;
                let deviation = fourier::hermitian_deviation(x);
                let tolerance = fourier::hermitian_tolerance(x);
                if deviation > tolerance {
                    return Err(AdError::NonHermitianSpectrum { deviation });
                }
                Value::Vector(fourier::idft(x).into_iter().map(|z| z.re).collect())
            }
            Op::LinComb {
                factor,
                base,
                terms,
            } => {
                let dim = match (base, terms.first()) {
                    (Some(b), _) => b.dim(),
                    (None, Some((_, m))) => m.dim(),
                    (None, None) => return Err(AdError::EmptyCombination),
                };
                let mut acc = match base {
                    Some(b) => (**b).clone(),
                    None => CMat::zeros(dim),
                };
                for (coef, mat) in terms {
                    if mat.dim() != dim {
                        return Err(shape_err(
                            "lin_comb",
                            "equal matrix shapes",
                            Shape::Matrix(mat.nrows(), mat.ncols()),
                        ));
                    }
                    let k = self.real_of(*coef, "lin_comb")?;
                    acc.scaled_add(Complex64::new(k, 0.0), &**mat);
                }
                acc.mapv_inplace(|z| z * factor);
                Value::Matrix(acc)
            }
            Op::MatMul(a, b) => {
                let (a, b) = (self.mat_of(*a, "matmul")?, self.mat_of(*b, "matmul")?);
                if a.ncols() != b.nrows() {
                    return Err(shape_err(
                        "matmul",
                        "conformable matrices",
                        Shape::Matrix(b.nrows(), b.ncols()),
                    ));
                }
                Value::Matrix(a.dot(b))
            }
            Op::ConstMatMul { left, x } => {
                let x = self.mat_of(*x, "const_matmul")?;
                if left.ncols() != x.nrows() {
                    return Err(shape_err(
                        "const_matmul",
                        "conformable matrices",
                        Shape::Matrix(x.nrows(), x.ncols()),
                    ));
                }
                Value::Matrix(left.dot(x))
            }
            Op::MatMulConst { x, right } => {
                let x = self.mat_of(*x, "matmul_const")?;
                if x.ncols() != right.nrows() {
                    return Err(shape_err(
                        "matmul_const",
                        "conformable matrices",
                        Shape::Matrix(x.nrows(), x.ncols()),
                    ));
                }
                Value::Matrix(x.dot(&**right))
            }
            Op::MatAdd(a, b) => {
                let (a, b) = (self.mat_of(*a, "mat_add")?, self.mat_of(*b, "mat_add")?);
                if a.dim() != b.dim() {
                    return Err(shape_err(
                        "mat_add",
                        "equal matrix shapes",
                        Shape::Matrix(b.nrows(), b.ncols()),
                    ));
                }
                Value::Matrix(a + b)
            }
            Op::MatScale(x, k) => Value::Matrix(self.mat_of(*x, "mat_scale")? * *k),
            Op::Adjoint(x) => Value::Matrix(dagger(self.mat_of(*x, "adjoint")?)),
            Op::Trace(x) => {
                let m = self.mat_of(*x, "trace")?;
                if m.nrows() != m.ncols() {
                    return Err(AdError::NonSquare(m.nrows(), m.ncols()));
                }
                Value::Complex(crate::linalg::trace(m))
            }
            Op::FrobeniusSq(x) => Value::Real(
                self.mat_of(*x, "frobenius_sq")?
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum(),
            ),
            Op::Abs2(z) => Value::Real(self.complex_of(*z, "abs2")?.norm_sqr()),
            Op::Abs(z) => Value::Real(self.complex_of(*z, "abs")?.norm()),
            Op::Re(z) => Value::Real(self.complex_of(*z, "re")?.re),
            Op::Im(z) => Value::Real(self.complex_of(*z, "im")?.im),
            Op::Expm(x) => {
                let m = self.mat_of(*x, "expm")?;
                if m.nrows() != m.ncols() {
                    return Err(AdError::NonSquare(m.nrows(), m.ncols()));
                }
                if !m.iter().all(|z| z.is_finite()) {
                    return Err(AdError::NonFinite { op: "expm" });
                }
                let (e, trace) = expm_traced(m);
                return Ok((Value::Matrix(e), Some(Box::new(trace))));
            }
        };
        Ok((value, None))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AdError> {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AdError> {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AdError> {
        self.push(Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var, AdError> {
        self.push(Op::Scale(a, k))
    }

    pub fn offset(&mut self, a: Var, k: f64) -> Result<Var, AdError> {
        self.push(Op::Offset(a, k))
    }

    pub fn sin(&mut self, a: Var) -> Result<Var, AdError> {
        self.push(Op::Sin(a))
    }

    pub fn cos(&mut self, a: Var) -> Result<Var, AdError> {
        self.push(Op::Cos(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, AdError> {
        self.push(Op::Exp(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, AdError> {
        self.push(Op::Sigmoid(a))
    }

    /// Elementwise `scale * x + shift`.
    pub fn vec_affine(&mut self, x: Var, scale: f64, shift: f64) -> Result<Var, AdError> {
        self.push(Op::VecAffine { x, scale, shift })
    }

    pub fn vec_sigmoid(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::VecSigmoid(x))
    }

    pub fn vec_exp(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::VecExp(x))
    }

    pub fn vec_tanh(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::VecTanh(x))
    }

    pub fn vec_add(&mut self, a: Var, b: Var) -> Result<Var, AdError> {
        self.push(Op::VecAdd(a, b))
    }

    pub fn vec_mul(&mut self, a: Var, b: Var) -> Result<Var, AdError> {
        self.push(Op::VecMul(a, b))
    }

    pub fn vec_mul_const(&mut self, x: Var, weights: Arc<Vec<f64>>) -> Result<Var, AdError> {
        self.push(Op::VecMulConst { x, weights })
    }

    pub fn vec_element(&mut self, x: Var, index: usize) -> Result<Var, AdError> {
        self.push(Op::VecElement { x, index })
    }

    /// Elementwise clamp; the derivative is 1 strictly inside the bounds and 0 elsewhere.
    pub fn vec_clamp(&mut self, x: Var, lower: f64, upper: f64) -> Result<Var, AdError> {
        self.push(Op::VecClamp { x, lower, upper })
    }

    /// `A x` for a constant real matrix `A`.
    pub fn linear_map(&mut self, x: Var, map: Arc<Array2<f64>>) -> Result<Var, AdError> {
        self.push(Op::LinearMap { x, map })
    }

    pub fn vec_sum(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::VecSum(x))
    }

    pub fn sum_squares(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::SumSquares(x))
    }

    /// Forward DFT of a real vector (negative exponent, unnormalised).
    pub fn dft(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::Dft(x))
    }

    /// Zeroes spectrum bins whose `keep` flag is false.
    pub fn spectrum_mask(&mut self, x: Var, keep: Arc<Vec<bool>>) -> Result<Var, AdError> {
        self.push(Op::SpectrumMask { x, keep })
    }

    /// Inverse DFT of a conjugate-symmetric spectrum, returning the real part.
    pub fn idft_real(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::IdftReal(x))
    }

    /// `factor * (base + sum_i x_i A_i)` for real scalar nodes `x_i` and constant matrices `A_i`.
    pub fn lin_comb(
        &mut self,
        factor: Complex64,
        base: Option<Arc<CMat>>,
        terms: Vec<(Var, Arc<CMat>)>,
    ) -> Result<Var, AdError> {
        self.push(Op::LinComb {
            factor,
            base,
            terms,
        })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AdError> {
        self.push(Op::MatMul(a, b))
    }

    pub fn const_matmul(&mut self, left: Arc<CMat>, x: Var) -> Result<Var, AdError> {
        self.push(Op::ConstMatMul { left, x })
    }

    pub fn matmul_const(&mut self, x: Var, right: Arc<CMat>) -> Result<Var, AdError> {
        self.push(Op::MatMulConst { x, right })
    }

    pub fn mat_add(&mut self, a: Var, b: Var) -> Result<Var, AdError> {
        self.push(Op::MatAdd(a, b))
    }

    pub fn mat_scale(&mut self, x: Var, k: Complex64) -> Result<Var, AdError> {
        self.push(Op::MatScale(x, k))
    }

    /// Conjugate transpose.
    pub fn adjoint(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::Adjoint(x))
    }

    pub fn trace(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::Trace(x))
    }

    /// `Tr(X X^H)`.
    pub fn frobenius_sq(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::FrobeniusSq(x))
    }

    pub fn abs2(&mut self, z: Var) -> Result<Var, AdError> {
        self.push(Op::Abs2(z))
    }

    pub fn abs(&mut self, z: Var) -> Result<Var, AdError> {
        self.push(Op::Abs(z))
    }

    pub fn re(&mut self, z: Var) -> Result<Var, AdError> {
        self.push(Op::Re(z))
    }

    pub fn im(&mut self, z: Var) -> Result<Var, AdError> {
        self.push(Op::Im(z))
    }

    /// Matrix exponential `e^X`.
    pub fn expm(&mut self, x: Var) -> Result<Var, AdError> {
        self.push(Op::Expm(x))
    }

    /// Reverse sweep from a real scalar output.
    ///
    /// Every gradient-enabled leaf appears in the result; leaves that do not
    /// influence the output get zeros.
    pub fn backward(&self, output: Var) -> Result<Gradients, AdError> {
        let out = self.value(output);
        if out.as_real().is_none() {
            return Err(AdError::NonScalarOutput(out.shape()));
        }
        let mut adj: Vec<Option<Value>> = vec![None; output.0 + 1];
        adj[output.0] = Some(Value::Real(1.0));
        let mut grads = Gradients::default();

        for i in (0..=output.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf { requires_grad } => {
                    if *requires_grad {
                        grads.map.insert(Var(i), g);
                    }
                }
                op => self.pull_back(op, node, g, &mut adj),
            }
        }

        for (i, node) in self.nodes.iter().enumerate() {
            if let Op::Leaf {
                requires_grad: true,
            } = node.op
            {
                grads
                    .map
                    .entry(Var(i))
                    .or_insert_with(|| node.value.zeros_like());
            }
        }
        Ok(grads)
    }

    fn pull_back(&self, op: &Op, node: &Node, g: Value, adj: &mut [Option<Value>]) {
        let mut acc = |v: Var, contrib: Value| match &mut adj[v.0] {
            Some(existing) => existing.accumulate(contrib),
            slot @ None => *slot = Some(contrib),
        };
        fn real(v: &Value) -> f64 {
            v.as_real().unwrap()
        }
        fn vecv(v: &Value) -> Vec<f64> {
            v.as_vector().unwrap().to_vec()
        }
        fn mat(v: &Value) -> &CMat {
            v.as_matrix().unwrap()
        }
        match op {
            Op::Leaf { .. } => unreachable!(),
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g);
            }
            Op::Sub(a, b) => {
                acc(*a, Value::Real(real(&g)));
                acc(*b, Value::Real(-real(&g)));
            }
            Op::Mul(a, b) => {
                let gr = real(&g);
                let (av, bv) = (self.real(*a), self.real(*b));
                acc(*a, Value::Real(gr * bv));
                acc(*b, Value::Real(gr * av));
            }
            Op::Scale(a, k) => acc(*a, Value::Real(k * real(&g))),
            Op::Offset(a, _) => acc(*a, g),
            Op::Sin(a) => acc(*a, Value::Real(real(&g) * self.real(*a).cos())),
            Op::Cos(a) => acc(*a, Value::Real(-real(&g) * self.real(*a).sin())),
            Op::Exp(a) => acc(*a, Value::Real(real(&g) * real(&node.value))),
            Op::Sigmoid(a) => {
                let s = real(&node.value);
                acc(*a, Value::Real(real(&g) * s * (1.0 - s)));
            }
            Op::VecAffine { x, scale, .. } => {
                acc(
                    *x,
                    Value::Vector(vecv(&g).into_iter().map(|v| v * scale).collect()),
                );
            }
            Op::VecSigmoid(x) => {
                let s = node.value.as_vector().unwrap();
                let gv = g.as_vector().unwrap();
                acc(
                    *x,
                    Value::Vector(gv.iter().zip(s).map(|(g, s)| g * s * (1.0 - s)).collect()),
                );
            }
            Op::VecExp(x) => {
                let e = node.value.as_vector().unwrap();
                let gv = g.as_vector().unwrap();
                acc(
                    *x,
                    Value::Vector(gv.iter().zip(e).map(|(g, e)| g * e).collect()),
                );
            }
            Op::VecTanh(x) => {
                let t = node.value.as_vector().unwrap();
                let gv = g.as_vector().unwrap();
                acc(
                    *x,
                    Value::Vector(gv.iter().zip(t).map(|(g, t)| g * (1.0 - t * t)).collect()),
                );
            }
            Op::VecAdd(a, b) => {
                acc(*a, g.clone());
                acc(*b, g);
            }
            Op::VecMul(a, b) => {
                let gv = g.as_vector().unwrap();
                let (av, bv) = (self.vector(*a), self.vector(*b));
                acc(
                    *a,
                    Value::Vector(gv.iter().zip(bv).map(|(g, y)| g * y).collect()),
                );
                acc(
                    *b,
                    Value::Vector(gv.iter().zip(av).map(|(g, x)| g * x).collect()),
                );
            }
            Op::VecMulConst { x, weights } => {
                let gv = g.as_vector().unwrap();
                acc(
                    *x,
                    Value::Vector(gv.iter().zip(weights.iter()).map(|(g, w)| g * w).collect()),
                );
            }
            Op::VecElement { x, index } => {
                let mut v = vec![0.0; self.vector(*x).len()];
                v[*index] = real(&g);
                acc(*x, Value::Vector(v));
            }
            Op::VecClamp { x, lower, upper } => {
                let gv = g.as_vector().unwrap();
                let xv = self.vector(*x);
                acc(
                    *x,
                    Value::Vector(
                        gv.iter()
                            .zip(xv)
                            .map(|(g, v)| if v > lower && v < upper { *g } else { 0.0 })
                            .collect(),
                    ),
                );
            }
            Op::LinearMap { x, map } => {
                let gv = Array1::from(g.as_vector().unwrap().to_vec());
                acc(*x, Value::Vector(map.t().dot(&gv).to_vec()));
            }
            Op::VecSum(x) => {
                acc(*x, Value::Vector(vec![real(&g); self.vector(*x).len()]));
            }
            Op::SumSquares(x) => {
                let gr = real(&g);
                acc(
                    *x,
                    Value::Vector(self.vector(*x).iter().map(|v| 2.0 * gr * v).collect()),
                );
            }
            Op::Dft(x) => {
                let back = fourier::dft_conj(g.as_cvector().unwrap());
                acc(*x, Value::Vector(back.into_iter().map(|z| z.re).collect()));
            }
            Op::SpectrumMask { x, keep } => {
                let gv = g.as_cvector().unwrap();
                acc(
                    *x,
                    Value::CVector(
                        gv.iter()
                            .zip(keep.iter())
                            .map(|(&z, &k)| if k { z } else { Complex64::new(0.0, 0.0) })
                            .collect(),
                    ),
                );
            }
            Op::IdftReal(x) => {
                let gv: Vec<Complex64> = g
                    .as_vector()
                    .unwrap()
                    .iter()
                    .map(|&v| Complex64::new(v, 0.0))
                    .collect();
                let n = gv.len() as f64;
                let back = fourier::dft_complex(&gv);
                acc(
                    *x,
                    Value::CVector(back.into_iter().map(|z| z / n).collect()),
                );
            }
            Op::LinComb { factor, terms, .. } => {
                let gm = mat(&g);
                for (coef, a) in terms {
                    let d: f64 = gm
                        .iter()
                        .zip(a.iter())
                        .map(|(gz, az)| (gz.conj() * az * factor).re)
                        .sum();
                    acc(*coef, Value::Real(d));
                }
            }
            Op::MatMul(a, b) => {
                let gm = mat(&g);
                let (am, bm) = (self.matrix(*a), self.matrix(*b));
                acc(*a, Value::Matrix(gm.dot(&dagger(bm))));
                acc(*b, Value::Matrix(dagger(am).dot(gm)));
            }
            Op::ConstMatMul { left, x } => {
                acc(*x, Value::Matrix(dagger(left).dot(mat(&g))));
            }
            Op::MatMulConst { x, right } => {
                acc(*x, Value::Matrix(mat(&g).dot(&dagger(right))));
            }
            Op::MatAdd(a, b) => {
                acc(*a, g.clone());
                acc(*b, g);
            }
            Op::MatScale(x, k) => acc(*x, Value::Matrix(mat(&g) * k.conj())),
            Op::Adjoint(x) => acc(*x, Value::Matrix(dagger(mat(&g)))),
            Op::Trace(x) => {
                let n = self.matrix(*x).nrows();
                acc(*x, Value::Matrix(identity(n) * g.as_complex().unwrap()));
            }
            Op::FrobeniusSq(x) => {
                acc(*x, Value::Matrix(self.matrix(*x) * (2.0 * real(&g))));
            }
            Op::Abs2(z) => {
                let zv = self.value(*z).as_complex().unwrap();
                acc(*z, Value::Complex(zv * (2.0 * real(&g))));
            }
            Op::Abs(z) => {
                let zv = self.value(*z).as_complex().unwrap();
                let r = zv.norm();
                let d = if r > 0.0 {
                    zv / r
                } else {
                    Complex64::new(0.0, 0.0)
                };
                acc(*z, Value::Complex(d * real(&g)));
            }
            Op::Re(z) => acc(*z, Value::Complex(Complex64::new(real(&g), 0.0))),
            Op::Im(z) => acc(*z, Value::Complex(Complex64::new(0.0, real(&g)))),
            Op::Expm(x) => {
                let trace = node.expm.as_ref().expect("expm node without trace");
                acc(*x, Value::Matrix(expm_adjoint(trace, mat(&g))));
            }
        }
    }
}
