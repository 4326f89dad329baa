//! Second-order truncated jets.
//!
//! A [`Jet2`] carries a value together with its gradient and Hessian with
//! respect to a fixed set of `n` chart variables. Arithmetic propagates both
//! orders exactly (up to rounding), which is all the geometry downstream needs:
//! second derivatives of an immersion and first derivatives of tensor fields.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Numeric carrier for expression evaluation.
///
/// Implemented by plain `f64` and by [`Jet2`]. Every elementary function is
/// routed through [`Scalar::apply`] with its first and second derivative at
/// the current value, so the evaluator is written once for both.
pub trait Scalar: Clone + fmt::Debug {
    fn constant(value: f64, nvars: usize) -> Self;
    fn value(&self) -> f64;
    fn nvars(&self) -> usize;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Composes with a scalar function `f` given `f(v)`, `f'(v)`, `f''(v)`.
    fn apply(&self, f0: f64, f1: f64, f2: f64) -> Self;
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn constant(value: f64, _nvars: usize) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn nvars(&self) -> usize {
        0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn apply(&self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// A value with its first and second derivatives over `n` variables. The
/// Hessian is stored symmetric.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    // Row-major n*n. Only ever written through `set_sym`.
    hess: Vec<f64>,
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad)
            .field("hess", &self.hessian_rows())
            .finish()
    }
}

impl Jet2 {
    pub fn constant(value: f64, nvars: usize) -> Jet2 {
        Jet2 {
            value,
            grad: vec![0.0; nvars],
            hess: vec![0.0; nvars * nvars],
        }
    }

    /// Seed jet for the `index`-th chart variable: unit gradient, zero Hessian.
    pub fn variable(value: f64, index: usize, nvars: usize) -> Jet2 {
        assert!(index < nvars, "variable index {index} out of range for {nvars} variables");
        let mut j = Jet2::constant(value, nvars);
        j.grad[index] = 1.0;
        j
    }

    /// Seeds one jet per coordinate of `point`.
    pub fn seed(point: &[f64]) -> Vec<Jet2> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet2::variable(v, i, n))
            .collect()
    }

    /// Builds a jet from explicit parts. Panics if the Hessian is not exactly
    /// symmetric or the shapes disagree.
    pub fn from_parts(value: f64, grad: Vec<f64>, hessian: Vec<Vec<f64>>) -> Jet2 {
        let n = grad.len();
        assert_eq!(hessian.len(), n, "hessian row count");
        let mut hess = vec![0.0; n * n];
        for (i, row) in hessian.iter().enumerate() {
            assert_eq!(row.len(), n, "hessian row {i} length");
            for (j, &v) in row.iter().enumerate() {
                assert!(
                    v == hessian[j][i] || (v.is_nan() && hessian[j][i].is_nan()),
                    "hessian not symmetric at ({i},{j})"
                );
                hess[i * n + j] = v;
            }
        }
        Jet2 { value, grad, hess }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn nvars(&self) -> usize {
        self.grad.len()
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.nvars() + j]
    }

    pub fn hessian_rows(&self) -> Vec<Vec<f64>> {
        let n = self.nvars();
        (0..n).map(|i| self.hess[i * n..(i + 1) * n].to_vec()).collect()
    }

    fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        let n = self.nvars();
        self.hess[i * n + j] = v;
        self.hess[j * n + i] = v;
    }

    fn check_dims(&self, other: &Jet2) {
        assert_eq!(
            self.nvars(),
            other.nvars(),
            "jets over different variable sets"
        );
    }

    fn product(&self, rhs: &Jet2) -> Jet2 {
        self.check_dims(rhs);
        let n = self.nvars();
        let (a, b) = (self.value, rhs.value);
        let grad = (0..n).map(|i| self.grad[i] * b + a * rhs.grad[i]).collect();
        let mut out = Jet2 {
            value: a * b,
            grad,
            hess: vec![0.0; n * n],
        };
        for i in 0..n {
            for j in i..n {
                let cross = self.grad[i] * rhs.grad[j] + rhs.grad[i] * self.grad[j];
                let v = a * rhs.hess[i * n + j] + b * self.hess[i * n + j] + cross;
                out.set_sym(i, j, v);
            }
        }
        out
    }

    fn compose(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.nvars();
        let grad = self.grad.iter().map(|g| f1 * g).collect();
        let mut out = Jet2 {
            value: f0,
            grad,
            hess: vec![0.0; n * n],
        };
        for i in 0..n {
            for j in i..n {
                let v = f1 * self.hess[i * n + j] + f2 * (self.grad[i] * self.grad[j]);
                out.set_sym(i, j, v);
            }
        }
        out
    }

    fn zip(&self, rhs: &Jet2, op: impl Fn(f64, f64) -> f64) -> Jet2 {
        self.check_dims(rhs);
        Jet2 {
            value: op(self.value, rhs.value),
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| op(*a, *b)).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| op(*a, *b)).collect(),
        }
    }
}

impl Scalar for Jet2 {
    fn constant(value: f64, nvars: usize) -> Self {
        Jet2::constant(value, nvars)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn nvars(&self) -> usize {
        self.grad.len()
    }
    fn add(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }
    fn sub(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }
    fn mul(&self, rhs: &Self) -> Self {
        self.product(rhs)
    }
    fn neg(&self) -> Self {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }
    fn apply(&self, f0: f64, f1: f64, f2: f64) -> Self {
        self.compose(f0, f1, f2)
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        Scalar::add(self, rhs)
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        Scalar::sub(self, rhs)
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.product(rhs)
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Scalar::neg(self)
    }
}
