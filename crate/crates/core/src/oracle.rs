//! Central finite differences as an independent route to the derivatives
//! that the jets deliver exactly.
//!
//! Errors are relative, `|a − b| / max(|b|, 1)`, so quantities of size one
//! and quantities near zero are judged on the same footing.

use crate::error::Result;
use crate::immersion::{Immersion, PointGeometry};
use crate::manifold::{christoffel, evaluate_structure, AmbientStructure, Derivatives};

pub const FD_STEP: f64 = 1e-5;

pub fn fd() -> Derivatives {
    Derivatives::CentralDifference { step: FD_STEP }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Max relative error between jet and finite-difference Christoffel symbols
/// of the ambient at `p`.
pub fn christoffel_error(amb: &AmbientStructure, p: &[f64]) -> Result<f64> {
    let exact = christoffel(&evaluate_structure(amb, p, Derivatives::Jets)?)?;
    let approx = christoffel(&evaluate_structure(amb, p, fd())?)?;
    let d = amb.dim();
    let mut worst: f64 = 0.0;
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                worst = worst.max(relative(exact.get(k, i, j), approx.get(k, i, j)));
            }
        }
    }
    Ok(worst)
}

/// Max relative error between the components of `h(∂ₐ, ∂ᵦ)` computed from
/// jets (`exact`) and from a finite-difference geometry at the same point.
pub fn second_fundamental_form_error(imm: &Immersion, exact: &PointGeometry) -> Result<f64> {
    let approx = PointGeometry::new(imm, &exact.u, fd())?;
    let n = exact.n();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a..n {
            let ea = unit(n, a);
            let eb = unit(n, b);
            let hj = exact.h(&ea, &eb);
            let hf = approx.h(&ea, &eb);
            for i in 0..hj.len() {
                worst = worst.max(relative(hj[i], hf[i]));
            }
        }
    }
    Ok(worst)
}

fn unit(n: usize, i: usize) -> crate::linalg::Vector {
    crate::linalg::Vector::from_fn(n, |k, _| (k == i) as u8 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin_ambient, EXAMPLE2_KENMOTSU};

    #[test]
    fn kenmotsu_christoffels_agree_with_differences() {
        let amb = builtin_ambient(EXAMPLE2_KENMOTSU).unwrap();
        let p = [0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8, 0.35];
        let e = christoffel_error(&amb, &p).unwrap();
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn curved_h_agrees_with_differences() {
        let imm = Immersion::from_strs(
            &["u1", "u2", "z"],
            &["u1", "(u1^2 - u2^2)/2", "0", "0", "u2", "u1*u2", "0", "0", "z"],
            builtin_ambient(EXAMPLE2_KENMOTSU).unwrap(),
        )
        .unwrap();
        let geo = imm.at(&[0.3, -0.7, 0.2]).unwrap();
        let e = second_fundamental_form_error(&imm, &geo).unwrap();
        assert!(e < 1e-5 && e > 0.0, "{e}");
    }
}
