//! Small dense helpers for inner products taken with respect to a metric
//! matrix. Matrices here are at most the ambient dimension, so everything is
//! plain `DMatrix`/`DVector`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative pivot threshold below which Gram–Schmidt declares dependence.
pub const DEPENDENCE_TOL: f64 = 1e-10;

pub fn inner(g: &Matrix, a: &Vector, b: &Vector) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..n {
            row += g[(i, j)] * b[j];
        }
        s += a[i] * row;
    }
    s
}

pub fn norm(g: &Matrix, a: &Vector) -> f64 {
    inner(g, a, a).max(0.0).sqrt()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass, processing the
/// input in order. Fails when a pivot falls below `DEPENDENCE_TOL` times the
/// input vector's norm.
pub fn orthonormalize(g: &Matrix, vectors: &[Vector]) -> Result<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        match orthogonal_residual(g, &out, v) {
            Some(w) => out.push(w),
            None => {
                let pivot = norm(g, &project_out(g, &out, v));
                return Err(Error::Dependent { index, pivot });
            }
        }
    }
    Ok(out)
}

/// Extends an orthonormal family with those `candidates` that are independent
/// of it, skipping dependent ones, until `target` vectors are held.
pub fn complete(g: &Matrix, base: &[Vector], candidates: &[Vector], target: usize) -> Vec<Vector> {
    let mut all: Vec<Vector> = base.to_vec();
    for c in candidates {
        if all.len() >= target {
            break;
        }
        if let Some(w) = orthogonal_residual(g, &all, c) {
            all.push(w);
        }
    }
    all.split_off(base.len())
}

fn project_out(g: &Matrix, basis: &[Vector], v: &Vector) -> Vector {
    let mut w = v.clone();
    for _ in 0..2 {
        for e in basis {
            let c = inner(g, e, &w);
            w.axpy(-c, e, 1.0);
        }
    }
    w
}

fn orthogonal_residual(g: &Matrix, basis: &[Vector], v: &Vector) -> Option<Vector> {
    let scale = norm(g, v);
    if scale == 0.0 {
        return None;
    }
    let w = project_out(g, basis, v);
    let n = norm(g, &w);
    if n < DEPENDENCE_TOL * scale {
        None
    } else {
        Some(w / n)
    }
}

/// Gram matrix `G_ij = g(v_i, v_j)`.
pub fn gram(g: &Matrix, vectors: &[Vector]) -> Matrix {
    let k = vectors.len();
    Matrix::from_fn(k, k, |i, j| inner(g, &vectors[i], &vectors[j]))
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Ratio of smallest to largest eigenvalue of a symmetric matrix, or a
/// non-positive number when it is not positive definite.
pub fn definiteness_ratio(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if max <= 0.0 {
        return min.min(0.0);
    }
    min / max
}
