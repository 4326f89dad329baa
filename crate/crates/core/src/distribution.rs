//! Splits `TM = D ⊕ D^θ ⊕ ⟨ξ⟩` of the tangent bundle into coordinate
//! distributions, their classification, and the pointwise identities that
//! hold for semi-slant submanifolds of Kenmotsu manifolds.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{p_param, pf_split, slant_angle};
use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Jet2};
use crate::immersion::{Immersion, PointGeometry};
use crate::linalg::{Matrix, Vector};
use crate::sampling::{point_stream, random_unit, Stream, DIRECTIONS_PER_POINT};

/// Angular tolerance separating `0` and `π/2` from proper slant angles.
pub const ANGLE_TOL: f64 = 1e-6;
/// Max `‖FX‖/‖X‖` for `D` to count as invariant.
pub const INVARIANCE_TOL: f64 = 1e-9;

/// Partition of the parameter indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub d: Vec<usize>,
    pub theta: Vec<usize>,
    pub xi: usize,
}

impl SplitSpec {
    /// Problems with the index partition itself.
    pub fn validate(&self, n: usize, problems: &mut Vec<String>) {
        let mut seen = vec![0usize; n];
        for &i in self.d.iter().chain(&self.theta).chain(std::iter::once(&self.xi)) {
            if i >= n {
                problems.push(format!("split index {i} out of range for {n} parameters"));
            } else {
                seen[i] += 1;
            }
        }
        for (i, &c) in seen.iter().enumerate() {
            if c == 0 {
                problems.push(format!("split does not cover parameter {i}"));
            } else if c > 1 {
                problems.push(format!("split assigns parameter {i} more than once"));
            }
        }
    }

    fn unit(n: usize, i: usize) -> Vector {
        Vector::from_fn(n, |k, _| (k == i) as u8 as f64)
    }

    pub fn d_basis(&self, n: usize) -> Vec<Vector> {
        self.d.iter().map(|&i| Self::unit(n, i)).collect()
    }

    pub fn theta_basis(&self, n: usize) -> Vec<Vector> {
        self.theta.iter().map(|&i| Self::unit(n, i)).collect()
    }

    pub fn xi_vector(&self, n: usize) -> Vector {
        Self::unit(n, self.xi)
    }

    /// Basis of `D ⊕ ⟨ξ⟩`.
    pub fn d_xi_basis(&self, n: usize) -> Vec<Vector> {
        let mut b = self.d_basis(n);
        b.push(self.xi_vector(n));
        b
    }
}

/// Pointwise structural residuals of a split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitResiduals {
    /// Max normalized `|g(A, B)|` across different blocks.
    pub orthogonality: f64,
    /// `‖X_ξ/‖X_ξ‖ − ξ/‖ξ‖‖` for the designated ξ column.
    pub xi_alignment: f64,
}

pub fn split_residuals(geo: &PointGeometry, split: &SplitSpec) -> SplitResiduals {
    let n = geo.n();
    let blocks = [split.d_basis(n), split.theta_basis(n), vec![split.xi_vector(n)]];
    let mut orth: f64 = 0.0;
    for (i, bi) in blocks.iter().enumerate() {
        for bj in blocks.iter().skip(i + 1) {
            for a in bi {
                for b in bj {
                    let r = geo.param_inner(a, b).abs() / (geo.param_norm(a) * geo.param_norm(b));
                    orth = orth.max(r);
                }
            }
        }
    }
    let x = geo.push(&split.xi_vector(n));
    let xi = &geo.structure.xi;
    let align = geo.norm(&(&x / geo.norm(&x) - xi / geo.norm(xi)));
    SplitResiduals {
        orthogonality: orth,
        xi_alignment: align,
    }
}

/// Max `‖FX‖/‖X‖` over the `D` basis.
pub fn invariance_residual(geo: &PointGeometry, split: &SplitSpec) -> f64 {
    split
        .d_basis(geo.n())
        .iter()
        .map(|x| {
            let (_, fx) = pf_split(geo, x);
            geo.norm(&fx) / geo.param_norm(x)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Invariant,
    AntiInvariant,
    Slant,
    ContactCr,
    SemiSlant,
    ProperSemiSlant,
    Unclassified,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Invariant => "invariant",
            Kind::AntiInvariant => "anti-invariant",
            Kind::Slant => "slant",
            Kind::ContactCr => "contact-CR",
            Kind::SemiSlant => "semi-slant",
            Kind::ProperSemiSlant => "proper-semi-slant",
            Kind::Unclassified => "unclassified",
        }
    }
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evidence gathered over a sample and the resulting kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: Kind,
    /// Mean sampled angle on `D^θ`, when `D^θ` is nonempty.
    pub slant_angle: Option<f64>,
    /// `max θ − min θ` over all sampled directions and points.
    pub slant_spread: f64,
    /// Max `‖FX‖/‖X‖` over `D`.
    pub invariance: f64,
    pub directions: usize,
}

/// Decision table. `slant` is `None` when `D^θ` is empty, otherwise the
/// angle estimate and whether it was constant over the sample.
pub fn decide(d_nonempty: bool, d_invariant: bool, slant: Option<(f64, bool)>) -> Kind {
    use std::f64::consts::FRAC_PI_2;
    let near = |a: f64, b: f64| (a - b).abs() <= ANGLE_TOL;
    match (d_nonempty, slant) {
        (_, Some((_, false))) => Kind::Unclassified,
        (true, _) if !d_invariant => Kind::Unclassified,
        (false, None) | (true, None) => Kind::Invariant,
        (false, Some((t, true))) => {
            if near(t, 0.0) {
                Kind::Invariant
            } else if near(t, FRAC_PI_2) {
                Kind::AntiInvariant
            } else {
                Kind::Slant
            }
        }
        (true, Some((t, true))) => {
            if near(t, FRAC_PI_2) {
                Kind::ContactCr
            } else if near(t, 0.0) {
                Kind::SemiSlant
            } else {
                Kind::ProperSemiSlant
            }
        }
    }
}

/// Samples `θ(X)` for random unit `X ∈ D^θ` at each point and applies the
/// decision table. Slant constancy requires a spread below [`ANGLE_TOL`].
pub fn classify(geos: &[PointGeometry], split: &SplitSpec, seed: u64) -> Result<Classification> {
    let mut invariance: f64 = 0.0;
    let (mut lo, mut hi, mut sum, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for (k, geo) in geos.iter().enumerate() {
        let r = split_residuals(geo, split);
        if r.orthogonality > 1e-9 {
            return Err(Error::Precondition(format!(
                "split blocks are not orthogonal at {:?} (residual {:.3e})",
                geo.u, r.orthogonality
            )));
        }
        invariance = invariance.max(invariance_residual(geo, split));
        if split.theta.is_empty() {
            continue;
        }
        let basis = split.theta_basis(geo.n());
        let mut rng = point_stream(seed, Stream::Directions, k);
        for _ in 0..DIRECTIONS_PER_POINT {
            let x = random_unit(&mut rng, geo, &basis)?;
            let t = slant_angle(geo, &x)?;
            lo = lo.min(t);
            hi = hi.max(t);
            sum += t;
            count += 1;
        }
    }
    let (slant_angle, spread) = if count > 0 {
        (Some(sum / count as f64), hi - lo)
    } else {
        (None, 0.0)
    };
    let kind = decide(
        !split.d.is_empty(),
        invariance < INVARIANCE_TOL,
        slant_angle.map(|t| (t, spread < ANGLE_TOL)),
    );
    Ok(Classification {
        kind,
        slant_angle,
        slant_spread: spread,
        invariance,
        directions: count,
    })
}

/// A parameter vector field known at one point by value and Jacobian
/// `jacobian[(a, b)] = ∂_b V^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamField {
    pub value: Vector,
    pub jacobian: Matrix,
}

impl ParamField {
    pub fn constant(value: Vector) -> ParamField {
        let n = value.len();
        ParamField {
            value,
            jacobian: Matrix::zeros(n, n),
        }
    }

    /// Evaluates component expressions over the immersion parameters.
    pub fn from_exprs(imm: &Immersion, u: &[f64], components: &[Expr]) -> Result<ParamField> {
        let n = imm.n();
        if components.len() != n {
            return Err(Error::Precondition(format!(
                "vector field has {} components, immersion has {n} parameters",
                components.len()
            )));
        }
        let seeds = Jet2::seed(u);
        let env = Env::new(imm.params(), &seeds);
        let jets: Vec<Jet2> = components
            .iter()
            .map(|e| e.eval(&env).map_err(|err| Error::eval(u, err)))
            .collect::<Result<_>>()?;
        Ok(ParamField {
            value: Vector::from_fn(n, |a, _| jets[a].value()),
            jacobian: Matrix::from_fn(n, n, |a, b| jets[a].gradient()[b]),
        })
    }

    /// A field with value `value` whose coefficients on `basis` are affine
    /// in the parameters with random slopes, so it stays a section of the
    /// span of `basis` but is not parallel in the chart.
    pub fn random_affine(rng: &mut ChaCha8Rng, value: Vector, basis: &[Vector]) -> ParamField {
        use rand::Rng;
        let n = value.len();
        let mut jacobian = Matrix::zeros(n, n);
        for b in basis {
            let slope = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            jacobian += b * slope.transpose();
        }
        ParamField { value, jacobian }
    }

    /// Directional derivative `X(V)` componentwise.
    pub fn along(&self, x: &Vector) -> Vector {
        &self.jacobian * x
    }
}

/// `[A, B]^a = A^b ∂_b B^a − B^b ∂_b A^a`.
pub fn bracket(a: &ParamField, b: &ParamField) -> Vector {
    b.along(&a.value) - a.along(&b.value)
}

/// Lie bracket of two expression-valued parameter fields at `u`.
pub fn lie_bracket(imm: &Immersion, u: &[f64], a: &[Expr], b: &[Expr]) -> Result<Vector> {
    Ok(bracket(&ParamField::from_exprs(imm, u, a)?, &ParamField::from_exprs(imm, u, b)?))
}

/// `∇_X Y` for a parameter field `Y` with non-constant coefficients.
pub fn nabla_field(geo: &PointGeometry, x: &Vector, y: &ParamField) -> Vector {
    geo.nabla(x, &y.value) + y.along(x)
}

/// Pieces shared by the Kenmotsu identities at one point.
pub struct Ops<'a> {
    pub geo: &'a PointGeometry,
    pub theta: f64,
}

impl<'a> Ops<'a> {
    pub fn new(geo: &'a PointGeometry, theta: f64) -> Ops<'a> {
        Ops { geo, theta }
    }

    pub fn sin2(&self) -> f64 {
        self.theta.sin().powi(2)
    }

    /// `φX` as a parameter vector, for `X` with `φX` tangent.
    pub fn phi_tangent(&self, x: &Vector) -> Vector {
        p_param(self.geo, x)
    }

    pub fn p(&self, x: &Vector) -> Vector {
        p_param(self.geo, x)
    }

    pub fn f(&self, x: &Vector) -> Vector {
        pf_split(self.geo, x).1
    }

    /// `A_N X` as an ambient vector; `N` is normal by construction.
    pub fn a(&self, normal: &Vector, x: &Vector) -> Vector {
        self.geo
            .shape_operator(normal, x)
            .expect("F-images are normal by construction")
    }

    pub fn g(&self, amb: &Vector, param: &Vector) -> f64 {
        self.geo.inner(amb, &self.geo.push(param))
    }

    pub fn gp(&self, x: &Vector, y: &Vector) -> f64 {
        self.geo.param_inner(x, y)
    }

    pub fn eta(&self, x: &Vector) -> f64 {
        self.geo.structure.eta_of(&self.geo.push(x))
    }

    pub fn norm(&self, x: &Vector) -> f64 {
        self.geo.param_norm(x)
    }

    /// `A_{FZ}φX − A_{FPZ}X`.
    pub fn combo(&self, z: &Vector, x: &Vector) -> Vector {
        self.a(&self.f(z), &self.phi_tangent(x)) - self.a(&self.f(&self.p(z)), x)
    }
}

/// `|sin²θ g(∇_Y X, Z) − g(A_{FZ}φX − A_{FPZ}X, Y)| / (‖X‖‖Y‖‖Z‖)` for
/// `X, Y ∈ D ⊕ ⟨ξ⟩`, `Z ∈ D^θ`.
pub fn first_connection_residual(ops: &Ops, x: &ParamField, y: &Vector, z: &Vector) -> f64 {
    let lhs = ops.sin2() * ops.gp(&nabla_field(ops.geo, y, x), z);
    let rhs = ops.g(&ops.combo(z, &x.value), y);
    (lhs - rhs).abs() / (ops.norm(&x.value) * ops.norm(y) * ops.norm(z))
}

/// `|g(∇_Z W, X) − csc²θ g(A_{FPW}X − A_{FW}φX, Z) + η(X)g(Z, W)|`,
/// normalized, for `X ∈ D ⊕ ⟨ξ⟩`, `Z, W ∈ D^θ`.
pub fn slant_connection_residual(ops: &Ops, x: &Vector, z: &Vector, w: &ParamField) -> f64 {
    let lhs = ops.gp(&nabla_field(ops.geo, z, w), x);
    let rhs = -ops.g(&ops.combo(&w.value, x), z) / ops.sin2() - ops.eta(x) * ops.gp(z, &w.value);
    (lhs - rhs).abs() / (ops.norm(x) * ops.norm(z) * ops.norm(&w.value))
}

/// `|sin²θ g([Z, W], X) − g(A_{FZ}φX − A_{FPZ}X, W) + g(A_{FW}φX − A_{FPW}X, Z)|`,
/// normalized.
pub fn slant_bracket_residual(ops: &Ops, x: &Vector, z: &ParamField, w: &ParamField) -> f64 {
    let lhs = ops.sin2() * ops.gp(&bracket(z, w), x);
    let rhs = ops.g(&ops.combo(&z.value, x), &w.value) - ops.g(&ops.combo(&w.value, x), &z.value);
    (lhs - rhs).abs() / (ops.norm(x) * ops.norm(&z.value) * ops.norm(&w.value))
}

/// Pointwise foliation diagnostics for one tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationSample {
    /// `|g(∇_Y X, Z)|` for `X, Y ∈ D ⊕ ⟨ξ⟩`, `Z ∈ D^θ`.
    pub first_geodesic: f64,
    /// `|g(A_{FZ}φX − A_{FPZ}X, Y)|`, zero iff the above is.
    pub first_shape: f64,
    /// `|g(∇_Z W, X)|` for `Z, W ∈ D^θ`, `X ∈ D ⊕ ⟨ξ⟩`.
    pub slant_geodesic: f64,
    /// `|g(A_{FPZ}X − A_{FZ}φX, W) − sin²θ η(X)g(Z, W)|`.
    pub slant_shape: f64,
    /// Component of `[X, Y]` outside `D ⊕ ⟨ξ⟩`.
    pub first_bracket: f64,
    /// Component of `[Z, W]` outside `D^θ`.
    pub slant_bracket: f64,
}

/// Norm of the part of parameter vector `v` that is g-orthogonal to the
/// span of `basis`.
fn off_span(geo: &PointGeometry, v: &Vector, basis: &[Vector]) -> f64 {
    let amb: Vec<Vector> = basis.iter().map(|b| geo.push(b)).collect();
    let on = match crate::linalg::orthonormalize(geo.metric(), &amb) {
        Ok(on) => on,
        Err(_) => return f64::NAN,
    };
    let mut w = geo.push(v);
    for e in &on {
        let c = geo.inner(e, &w);
        w.axpy(-c, e, 1.0);
    }
    geo.norm(&w)
}

pub fn foliation_sample(
    ops: &Ops,
    split: &SplitSpec,
    x: &ParamField,
    y: &ParamField,
    z: &ParamField,
    w: &ParamField,
) -> FoliationSample {
    let n = ops.geo.n();
    let nx = ops.norm(&x.value);
    let ny = ops.norm(&y.value);
    let nz = ops.norm(&z.value);
    let nw = ops.norm(&w.value);
    let first_geodesic = ops.gp(&nabla_field(ops.geo, &y.value, x), &z.value).abs() / (nx * ny * nz);
    let first_shape = ops.g(&ops.combo(&z.value, &x.value), &y.value).abs() / (nx * ny * nz);
    let slant_geodesic = ops.gp(&nabla_field(ops.geo, &z.value, w), &x.value).abs() / (nx * nz * nw);
    let slant_lhs = -ops.g(&ops.combo(&z.value, &x.value), &w.value);
    let slant_shape =
        (slant_lhs - ops.sin2() * ops.eta(&x.value) * ops.gp(&z.value, &w.value)).abs() / (nx * nz * nw);
    let first_bracket = off_span(ops.geo, &bracket(x, y), &split.d_xi_basis(n)) / (nx * ny);
    let slant_bracket = off_span(ops.geo, &bracket(z, w), &split.theta_basis(n)) / (nz * nw);
    FoliationSample {
        first_geodesic,
        first_shape,
        slant_geodesic,
        slant_shape,
        first_bracket,
        slant_bracket,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::manifold::{builtin_ambient, EXAMPLE1_R9, EXAMPLE2_KENMOTSU};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn decision_table() {
        assert_eq!(decide(true, true, Some((1.2, true))), Kind::ProperSemiSlant);
        assert_eq!(decide(true, true, Some((FRAC_PI_2, true))), Kind::ContactCr);
        assert_eq!(decide(true, true, Some((FRAC_PI_2 - 1e-7, true))), Kind::ContactCr);
        assert_eq!(decide(true, true, Some((0.0, true))), Kind::SemiSlant);
        assert_eq!(decide(false, true, Some((0.7, true))), Kind::Slant);
        assert_eq!(decide(false, true, Some((FRAC_PI_2, true))), Kind::AntiInvariant);
        assert_eq!(decide(true, true, None), Kind::Invariant);
        assert_eq!(decide(true, false, Some((0.7, true))), Kind::Unclassified);
        assert_eq!(decide(true, true, Some((0.7, false))), Kind::Unclassified);
    }

    #[test]
    fn brackets() {
        let imm = Immersion::from_strs(
            &["u1", "u2"],
            &["u1", "u2", "0", "0", "0", "0", "0", "0", "0"],
            builtin_ambient(EXAMPLE1_R9).unwrap(),
        )
        .unwrap();
        let a = [parse("u2").unwrap(), Expr::num(0.0)];
        let b = [Expr::num(0.0), Expr::num(1.0)];
        let v = lie_bracket(&imm, &[0.3, 0.8], &a, &b).unwrap();
        assert_eq!(v.as_slice(), &[-1.0, 0.0]);
        let coord = [Expr::num(1.0), Expr::num(0.0)];
        assert_eq!(lie_bracket(&imm, &[0.3, 0.8], &coord, &b).unwrap().amax(), 0.0);
        let p = [parse("u1*u2^2").unwrap(), parse("sin(u1)").unwrap()];
        let q = [parse("exp(u2)").unwrap(), parse("u1 - u2").unwrap()];
        let pq = lie_bracket(&imm, &[0.3, 0.8], &p, &q).unwrap();
        let qp = lie_bracket(&imm, &[0.3, 0.8], &q, &p).unwrap();
        assert_eq!(pq, -qp);
    }

    #[test]
    fn example1_split_residuals() {
        let imm = Immersion::from_strs(
            &["u", "v", "v3", "v4", "z"],
            &["cos(u + v)", "u - v", "u/2 + v", "v3 + v4", "sin(u + v)", "v - u", "u + v/2", "v4 - v3", "z"],
            builtin_ambient(EXAMPLE1_R9).unwrap(),
        )
        .unwrap();
        let split = SplitSpec {
            d: vec![2, 3],
            theta: vec![0, 1],
            xi: 4,
        };
        let geos: Vec<PointGeometry> = [[0.1, 0.2, 0.3, 0.4, 0.5], [-0.9, 0.4, 0.0, 0.7, -0.2]]
            .iter()
            .map(|u| imm.at(u).unwrap())
            .collect();
        let r = split_residuals(&geos[0], &split);
        assert!(r.orthogonality < 1e-15 && r.xi_alignment < 1e-15);
        let c = classify(&geos, &split, 42).unwrap();
        assert_eq!(c.kind, Kind::ProperSemiSlant);
        assert!((c.slant_angle.unwrap().cos() - 3.0 / 17.0).abs() < 1e-12);
        assert!(c.slant_spread < 1e-12);
    }

    #[test]
    fn slant_connection_with_xi_reduces_to_kenmotsu_formula() {
        // The example1 immersion placed in the Kenmotsu ambient: curved, semi-slant.
        let imm = Immersion::from_strs(
            &["u", "v", "v3", "v4", "z"],
            &["cos(u + v)", "u - v", "u/2 + v", "v3 + v4", "sin(u + v)", "v - u", "u + v/2", "v4 - v3", "z"],
            builtin_ambient(EXAMPLE2_KENMOTSU).unwrap(),
        )
        .unwrap();
        let geo = imm.at(&[0.2, -0.5, 0.1, 0.3, 0.4]).unwrap();
        let theta = (3.0f64 / 17.0).acos();
        let ops = Ops::new(&geo, theta);
        let e = |i: usize| SplitSpec::unit(5, i);
        let xi = e(4);
        for (z, w) in [(e(0), e(0)), (e(0), e(1)), (e(1), e(1))] {
            let r = slant_connection_residual(&ops, &xi, &z, &ParamField::constant(w.clone()));
            assert!(r < 1e-12, "{r}");
            let lhs = ops.gp(&geo.nabla(&z, &w), &xi);
            assert!((lhs + ops.gp(&z, &w)).abs() < 1e-12);
        }
        for x in [e(2), e(3), xi.clone()] {
            for y in [e(2), e(3), xi.clone()] {
                for z in [e(0), e(1)] {
                    assert!(first_connection_residual(&ops, &ParamField::constant(x.clone()), &y, &z) < 1e-12);
                }
            }
        }
    }
}
