//! Tangential and normal parts of `φ`: `φX = PX + FX`, `φN = tN + fN`,
//! slant angles, and the `P² = λ(−I + η⊗ξ)` characterization of slant
//! subbundles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::immersion::PointGeometry;
use crate::linalg::{Matrix, Vector};

/// Minimum angle between `X` and `ξ` for `θ(X)` to be defined.
pub const XI_ANGLE_TOL: f64 = 1e-8;

/// Matrices of `P, F, t, f` in the parameter basis and the orthonormal
/// normal frame of a [`PointGeometry`].
#[derive(Debug, Clone)]
pub struct PFDecomposition {
    /// `n × n`: column `a` holds the parameter coefficients of `P ∂ₐ`.
    pub p: Matrix,
    /// `codim × n`: column `a` holds the normal-frame components of `F ∂ₐ`.
    pub f_tan: Matrix,
    /// `n × codim`: column `r` holds the parameter coefficients of `t N_r`.
    pub t: Matrix,
    /// `codim × codim`.
    pub f_nor: Matrix,
}

impl PFDecomposition {
    pub fn new(geo: &PointGeometry) -> PFDecomposition {
        let n = geo.n();
        let k = geo.normal_on.len();
        let mut p = Matrix::zeros(n, n);
        let mut f_tan = Matrix::zeros(k, n);
        for a in 0..n {
            let phi_x = geo.structure.phi_of(&geo.jacobian.column(a).into_owned());
            p.set_column(a, &geo.coeffs(&phi_x));
            for (r, nr) in geo.normal_on.iter().enumerate() {
                f_tan[(r, a)] = geo.inner(&phi_x, nr);
            }
        }
        let mut t = Matrix::zeros(n, k);
        let mut f_nor = Matrix::zeros(k, k);
        for (r, nv) in geo.normal_on.iter().enumerate() {
            let phi_n = geo.structure.phi_of(nv);
            t.set_column(r, &geo.coeffs(&phi_n));
            for (q, nq) in geo.normal_on.iter().enumerate() {
                f_nor[(q, r)] = geo.inner(&phi_n, nq);
            }
        }
        PFDecomposition { p, f_tan, t, f_nor }
    }

    /// Max g-norm of `φX − PX − FX` and `φN − tN − fN` over the parameter
    /// basis and the normal frame, relative to the input norm.
    pub fn reconstruction_residual(&self, geo: &PointGeometry) -> f64 {
        let n = geo.n();
        let normal_vec = |comps: nalgebra::DVectorView<'_, f64>| -> Vector {
            let mut v = Vector::zeros(geo.dim());
            for (r, nr) in geo.normal_on.iter().enumerate() {
                v.axpy(comps[r], nr, 1.0);
            }
            v
        };
        let mut worst: f64 = 0.0;
        for a in 0..n {
            let x = geo.jacobian.column(a).into_owned();
            let rebuilt = geo.push(&self.p.column(a).into_owned()) + normal_vec(self.f_tan.column(a));
            let r = geo.norm(&(geo.structure.phi_of(&x) - rebuilt)) / geo.norm(&x);
            worst = worst.max(r);
        }
        for (r, nv) in geo.normal_on.iter().enumerate() {
            let rebuilt = geo.push(&self.t.column(r).into_owned()) + normal_vec(self.f_nor.column(r));
            worst = worst.max(geo.norm(&(geo.structure.phi_of(nv) - rebuilt)));
        }
        worst
    }

    /// Max `|g(PX, Y) + g(X, PY)|` over orthonormal tangent pairs.
    pub fn skew_residual(&self, geo: &PointGeometry) -> f64 {
        let frame = geo.tangent_on_params();
        let mut worst: f64 = 0.0;
        for x in &frame {
            for y in &frame {
                let s = geo.param_inner(&(&self.p * x), y) + geo.param_inner(x, &(&self.p * y));
                worst = worst.max(s.abs());
            }
        }
        worst
    }
}

/// `(PX, FX)` for a parameter vector `X`, both as ambient vectors.
pub fn pf_split(geo: &PointGeometry, x: &Vector) -> (Vector, Vector) {
    let phi_x = geo.structure.phi_of(&geo.push(x));
    let px = geo.tangential(&phi_x);
    let fx = phi_x - &px;
    (px, fx)
}

/// `P` as a map on parameter vectors.
pub fn p_param(geo: &PointGeometry, x: &Vector) -> Vector {
    geo.coeffs(&geo.structure.phi_of(&geo.push(x)))
}

/// `(tN, fN)` for an ambient normal vector `N`.
pub fn tf_split(geo: &PointGeometry, normal: &Vector) -> Result<(Vector, Vector)> {
    let r = geo.tangential_ratio(normal);
    if r > crate::immersion::NORMALITY_TOL {
        return Err(Error::NotNormal { residual: r });
    }
    let phi_n = geo.structure.phi_of(normal);
    let tn = geo.tangential(&phi_n);
    let fn_ = phi_n - &tn;
    Ok((tn, fn_))
}

/// `sin` of the g-angle between an ambient vector and `ξ`.
fn sin_angle_to_xi(geo: &PointGeometry, v: &Vector) -> f64 {
    let xi = &geo.structure.xi;
    let nv = geo.norm(v);
    let nx = geo.norm(xi);
    if nv == 0.0 || nx == 0.0 {
        return 0.0;
    }
    let c = geo.inner(v, xi) / (nv * nx);
    (1.0 - c * c).max(0.0).sqrt()
}

/// `θ(X)`, the angle between `φX` and the tangent space. Evaluated as
/// `atan2(‖FX‖, ‖PX‖)`, which equals `arccos(‖PX‖ / ‖φX‖)` but keeps full
/// precision near 0 and π/2.
pub fn slant_angle(geo: &PointGeometry, x: &Vector) -> Result<f64> {
    let v = geo.push(x);
    if sin_angle_to_xi(geo, &v) <= XI_ANGLE_TOL {
        return Err(Error::AlongXi);
    }
    let phi_x = geo.structure.phi_of(&v);
    let nphi = geo.norm(&phi_x);
    if nphi == 0.0 {
        return Err(Error::Precondition("φX vanishes for a direction transverse to ξ".into()));
    }
    let px = geo.tangential(&phi_x);
    let fx = &phi_x - &px;
    Ok(geo.norm(&fx).atan2(geo.norm(&px)))
}

/// Least-squares `λ̂` in `P²X = λ(−X + η(X)ξ)` over a basis of parameter
/// vectors, with the max relative deviation of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaFit {
    pub lambda: f64,
    pub residual: f64,
}

pub fn fit_lambda(geo: &PointGeometry, basis: &[Vector]) -> Result<LambdaFit> {
    let xi = &geo.structure.xi;
    let mut pairs = Vec::with_capacity(basis.len());
    let (mut num, mut den) = (0.0, 0.0);
    for x in basis {
        let v = geo.push(x);
        let p2 = geo.push(&p_param(geo, &p_param(geo, x)));
        let target = xi * geo.structure.eta_of(&v) - &v;
        num += geo.inner(&p2, &target);
        den += geo.inner(&target, &target);
        pairs.push((p2, target, geo.norm(&v)));
    }
    if den == 0.0 {
        return Err(Error::Precondition(
            "subbundle has no direction transverse to ξ; λ is undefined".into(),
        ));
    }
    let lambda = num / den;
    let residual = pairs
        .iter()
        .map(|(p2, target, nx)| geo.norm(&(p2 - target * lambda)) / nx)
        .fold(0.0, f64::max);
    Ok(LambdaFit { lambda, residual })
}

/// Residuals of `g(PX, PY) = cos²θ[g(X, Y) − η(X)η(Y)]` and
/// `g(FX, FY) = sin²θ[g(X, Y) − η(X)η(Y)]` over basis pairs, each divided
/// by `‖X‖‖Y‖`.
pub fn slant_norm_residuals(geo: &PointGeometry, basis: &[Vector], theta: f64) -> (f64, f64) {
    let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
    let parts: Vec<(Vector, Vector, Vector)> = basis
        .iter()
        .map(|x| {
            let (px, fx) = pf_split(geo, x);
            (geo.push(x), px, fx)
        })
        .collect();
    let (mut r8, mut r9): (f64, f64) = (0.0, 0.0);
    for (x, px, fx) in &parts {
        for (y, py, fy) in &parts {
            let scale = geo.norm(x) * geo.norm(y);
            let base = geo.inner(x, y) - geo.structure.eta_of(x) * geo.structure.eta_of(y);
            r8 = r8.max((geo.inner(px, py) - c2 * base).abs() / scale);
            r9 = r9.max((geo.inner(fx, fy) - s2 * base).abs() / scale);
        }
    }
    (r8, r9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::Immersion;
    use crate::manifold::{builtin_ambient, EXAMPLE1_R9, EXAMPLE2_KENMOTSU};

    fn e(n: usize, i: usize) -> Vector {
        Vector::from_fn(n, |k, _| (k == i) as u8 as f64)
    }

    fn example1_at(u: &[f64]) -> PointGeometry {
        Immersion::from_strs(
            &["u", "v", "v3", "v4", "z"],
            &["cos(u + v)", "u - v", "u/2 + v", "v3 + v4", "sin(u + v)", "v - u", "u + v/2", "v4 - v3", "z"],
            builtin_ambient(EXAMPLE1_R9).unwrap(),
        )
        .unwrap()
        .at(u)
        .unwrap()
    }

    fn example2_at(theta: f64, u: &[f64]) -> PointGeometry {
        let c = format!("u4*cos({theta:?})");
        let s = format!("u4*sin({theta:?})");
        Immersion::from_strs(
            &["u1", "u2", "u3", "u4", "z"],
            &["u1", "0", "u3", "0", "u2", "0", &c, &s, "z"],
            builtin_ambient(EXAMPLE2_KENMOTSU).unwrap(),
        )
        .unwrap()
        .at(u)
        .unwrap()
    }

    #[test]
    fn xi_has_no_p_or_f() {
        let geo = example1_at(&[0.4, 0.1, 0.0, 0.0, 0.3]);
        let (px, fx) = pf_split(&geo, &e(5, 4));
        assert_eq!(px.amax(), 0.0);
        assert_eq!(fx.amax(), 0.0);
        assert!(matches!(slant_angle(&geo, &e(5, 4)), Err(Error::AlongXi)));
    }

    #[test]
    fn example1_p_on_first_vector() {
        let geo = example1_at(&[0.4, 0.1, 0.0, 0.0, 0.3]);
        let p = p_param(&geo, &e(5, 0));
        let want = e(5, 1) * (3.0 / 17.0);
        assert!((p - want).amax() < 1e-14);
        let theta = slant_angle(&geo, &e(5, 0)).unwrap();
        assert!((theta.cos() - 3.0 / 17.0).abs() < 1e-14);
        assert!((theta - 1.393_396_722_354_526).abs() < 1e-14);
    }

    #[test]
    fn example1_invariant_part() {
        let geo = example1_at(&[-0.2, 0.6, 0.5, -1.0, 0.0]);
        let (px, fx) = pf_split(&geo, &e(5, 2));
        assert!((px + geo.push(&e(5, 3))).amax() < 1e-14);
        assert!(fx.amax() < 1e-14);
        assert!(slant_angle(&geo, &e(5, 2)).unwrap() < 1e-15);
    }

    #[test]
    fn decomposition_reconstructs_and_is_skew() {
        let geo = example1_at(&[0.3, -0.7, 0.2, 0.9, 0.1]);
        let d = PFDecomposition::new(&geo);
        assert!(d.reconstruction_residual(&geo) < 1e-13);
        assert!(d.skew_residual(&geo) < 1e-13);
    }

    #[test]
    fn lambda_fits() {
        let geo = example1_at(&[0.3, -0.7, 0.2, 0.9, 0.1]);
        let slant = fit_lambda(&geo, &[e(5, 0), e(5, 1)]).unwrap();
        assert!((slant.lambda - 9.0 / 289.0).abs() < 1e-14);
        assert!(slant.residual < 1e-13);
        let inv = fit_lambda(&geo, &[e(5, 2), e(5, 3)]).unwrap();
        assert!((inv.lambda - 1.0).abs() < 1e-14);
        let (r8, r9) = slant_norm_residuals(&geo, &[e(5, 0), e(5, 1), e(5, 4)], (3.0f64 / 17.0).acos());
        assert!(r8 < 1e-13 && r9 < 1e-13);
    }

    #[test]
    fn example2_slant_angle_and_t_f() {
        let th = std::f64::consts::FRAC_PI_4;
        let geo = example2_at(th, &[0.1, -0.3, 0.7, 0.2, 0.35]);
        let z = e(5, 2);
        assert!((slant_angle(&geo, &z).unwrap() - th).abs() < 1e-12);
        let (_, fz) = pf_split(&geo, &z);
        let (tfz, _) = tf_split(&geo, &fz).unwrap();
        let zv = geo.push(&z);
        let lhs = geo.inner(&tfz, &zv);
        let rhs = -th.sin().powi(2) * geo.inner(&zv, &zv);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn anti_invariant_variant_has_zero_lambda() {
        let geo = example2_at(std::f64::consts::FRAC_PI_2, &[0.1, -0.3, 0.7, 0.2, 0.35]);
        let fit = fit_lambda(&geo, &[e(5, 2), e(5, 3)]).unwrap();
        assert!(fit.lambda.abs() < 1e-12);
    }
}
