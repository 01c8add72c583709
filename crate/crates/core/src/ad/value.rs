// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;

use crate::linalg::CMat;

/// Payload carried by a tape node.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Complex(Complex64),
    Vector(Vec<f64>),
    CVector(Vec<Complex64>),
    Matrix(CMat),
}

/// Shape and dtype of a [`Value`], used for error reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Real,
    Complex,
    Vector(usize),
    CVector(usize),
    Matrix(usize, usize),
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Real => write!(f, "real scalar"),
            Shape::Complex => write!(f, "complex scalar"),
            Shape::Vector(n) => write!(f, "real vector({n})"),
            Shape::CVector(n) => write!(f, "complex vector({n})"),
            Shape::Matrix(r, c) => write!(f, "complex matrix({r}x{c})"),
        }
    }
}

impl Value {
    pub fn shape(&self) -> Shape {
        match self {
            Value::Real(_) => Shape::Real,
            Value::Complex(_) => Shape::Complex,
            Value::Vector(v) => Shape::Vector(v.len()),
            Value::CVector(v) => Shape::CVector(v.len()),
            Value::Matrix(m) => Shape::Matrix(m.nrows(), m.ncols()),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Value::Real(x) => x.is_finite(),
            Value::Complex(z) => z.is_finite(),
            Value::Vector(v) => v.iter().all(|x| x.is_finite()),
            Value::CVector(v) => v.iter().all(|z| z.is_finite()),
            Value::Matrix(m) => m.iter().all(|z| z.is_finite()),
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            Value::Complex(z) => Some(*z),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Value::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_cvector(&self) -> Option<&[Complex64]> {
        match self {
            Value::CVector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&CMat> {
        match self {
            Value::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub(crate) fn zeros_like(&self) -> Value {
        match self {
            Value::Real(_) => Value::Real(0.0),
            Value::Complex(_) => Value::Complex(Complex64::new(0.0, 0.0)),
            Value::Vector(v) => Value::Vector(vec![0.0; v.len()]),
            Value::CVector(v) => Value::CVector(vec![Complex64::new(0.0, 0.0); v.len()]),
            Value::Matrix(m) => Value::Matrix(CMat::zeros(m.dim())),
        }
    }

    /// In-place `self += other`; shapes are guaranteed equal by the tape.
    pub(crate) fn accumulate(&mut self, other: Value) {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => *a += b,
            (Value::Complex(a), Value::Complex(b)) => *a += b,
            (Value::Vector(a), Value::Vector(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            (Value::CVector(a), Value::CVector(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            (Value::Matrix(a), Value::Matrix(b)) => *a += &b,
            (a, b) => unreachable!("adjoint shape mismatch: {} vs {}", a.shape(), b.shape()),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<Complex64> for Value {
    fn from(z: Complex64) -> Self {
        Value::Complex(z)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::Vector(v)
    }
}

impl From<CMat> for Value {
    fn from(m: CMat) -> Self {
        Value::Matrix(m)
    }
}
