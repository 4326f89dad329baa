//! Ambient almost contact metric structure `(φ, ξ, η, g)` on one global chart,
//! its Levi-Civita connection, and pointwise structure checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Env, Expr, Jet2, Scalar};
use crate::linalg::{self, Matrix, Vector};

/// How first derivatives of tensor fields are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivatives {
    /// Exact jets.
    Jets,
    /// Central finite differences with the given step.
    CentralDifference { step: f64 },
}

/// Almost contact metric structure given by expressions in the chart
/// coordinates. Matrices are row-major; column `j` of `phi` is `φ(∂_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientStructure {
    pub name: String,
    coords: Vec<String>,
    phi: Vec<Expr>,
    xi: Vec<Expr>,
    eta: Vec<Expr>,
    metric: Vec<Expr>,
}

/// Text form of an ambient structure, as stored in scenario documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientDoc {
    pub coords: Vec<String>,
    pub phi: Vec<Vec<String>>,
    pub xi: Vec<String>,
    pub eta: Vec<String>,
    pub metric: Vec<Vec<String>>,
}

impl AmbientStructure {
    /// Validates shapes, variable references and odd dimension. All problems
    /// are reported together.
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        phi: Vec<Vec<Expr>>,
        xi: Vec<Expr>,
        eta: Vec<Expr>,
        metric: Vec<Vec<Expr>>,
    ) -> Result<AmbientStructure> {
        let dim = coords.len();
        let mut problems = Vec::new();
        if dim.is_multiple_of(2) {
            problems.push(format!("ambient dimension {dim} is not odd"));
        }
        for reserved in ["pi", "e"] {
            if coords.iter().any(|c| c == reserved) {
                problems.push(format!("coordinate name `{reserved}` is reserved"));
            }
        }
        let check_square = |m: &Vec<Vec<Expr>>, what: &str, problems: &mut Vec<String>| {
            if m.len() != dim || m.iter().any(|r| r.len() != dim) {
                problems.push(format!("{what} must be {dim}x{dim}"));
            }
        };
        check_square(&phi, "phi", &mut problems);
        check_square(&metric, "metric", &mut problems);
        if xi.len() != dim {
            problems.push(format!("xi has {} components, ambient dimension is {dim}", xi.len()));
        }
        if eta.len() != dim {
            problems.push(format!("eta has {} components, ambient dimension is {dim}", eta.len()));
        }
        let all = phi.iter().flatten().chain(&xi).chain(&eta).chain(metric.iter().flatten());
        for e in all {
            for v in e.variables() {
                if !coords.contains(&v) {
                    let msg = format!("ambient expression `{e}` references unknown coordinate `{v}`");
                    if !problems.contains(&msg) {
                        problems.push(msg);
                    }
                }
            }
        }
        if metric.len() == dim && metric.iter().all(|r| r.len() == dim) {
            for i in 0..dim {
                for j in (i + 1)..dim {
                    if metric[i][j] != metric[j][i] {
                        problems.push(format!(
                            "metric is not symmetric: entry ({i},{j}) `{}` differs from ({j},{i}) `{}`",
                            metric[i][j], metric[j][i]
                        ));
                    }
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Invalid(problems));
        }
        Ok(AmbientStructure {
            name: name.into(),
            coords,
            phi: phi.into_iter().flatten().collect(),
            xi,
            eta,
            metric: metric.into_iter().flatten().collect(),
        })
    }

    pub fn from_doc(name: impl Into<String>, doc: &AmbientDoc) -> Result<AmbientStructure> {
        let mut problems = Vec::new();
        let mut p = |s: &str| match parse(s) {
            Ok(e) => e,
            Err(err) => {
                problems.push(format!("expression `{s}`: {err}"));
                Expr::num(0.0)
            }
        };
        let phi: Vec<Vec<Expr>> = doc.phi.iter().map(|r| r.iter().map(|s| p(s)).collect()).collect();
        let xi = doc.xi.iter().map(|s| p(s)).collect();
        let eta = doc.eta.iter().map(|s| p(s)).collect();
        let metric: Vec<Vec<Expr>> = doc.metric.iter().map(|r| r.iter().map(|s| p(s)).collect()).collect();
        if !problems.is_empty() {
            return Err(Error::Invalid(problems));
        }
        AmbientStructure::new(name, doc.coords.clone(), phi, xi, eta, metric)
    }

    pub fn to_doc(&self) -> AmbientDoc {
        let d = self.dim();
        let rows = |m: &[Expr]| -> Vec<Vec<String>> {
            (0..d).map(|i| (0..d).map(|j| m[i * d + j].to_string()).collect()).collect()
        };
        AmbientDoc {
            coords: self.coords.clone(),
            phi: rows(&self.phi),
            xi: self.xi.iter().map(ToString::to_string).collect(),
            eta: self.eta.iter().map(ToString::to_string).collect(),
            metric: rows(&self.metric),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn metric_expr(&self, i: usize, j: usize) -> &Expr {
        &self.metric[i * self.dim() + j]
    }

    pub fn phi_expr(&self, i: usize, j: usize) -> &Expr {
        &self.phi[i * self.dim() + j]
    }

    pub fn xi_expr(&self, i: usize) -> &Expr {
        &self.xi[i]
    }

    pub fn eta_expr(&self, i: usize) -> &Expr {
        &self.eta[i]
    }

    /// Evaluates the metric over an arbitrary scalar carrier, with the chart
    /// coordinates bound to `coords`. Used to pull the metric back along an
    /// immersion with jets over the immersion parameters.
    pub fn metric_with<T: Scalar>(&self, coords: &[T]) -> std::result::Result<Vec<T>, crate::expr::EvalError> {
        let env = Env::new(&self.coords, coords);
        self.metric.iter().map(|e| e.eval(&env)).collect()
    }
}

/// Tensor fields and their first chart derivatives at one point.
#[derive(Debug, Clone)]
pub struct StructureEval {
    pub point: Vector,
    pub phi: Matrix,
    pub xi: Vector,
    pub eta: Vector,
    pub metric: Matrix,
    /// `d_metric[k]` is `∂_k g`.
    pub d_metric: Vec<Matrix>,
    pub d_phi: Vec<Matrix>,
    pub d_xi: Vec<Vector>,
    pub d_eta: Vec<Vector>,
}

impl StructureEval {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn inner(&self, a: &Vector, b: &Vector) -> f64 {
        linalg::inner(&self.metric, a, b)
    }

    pub fn norm(&self, a: &Vector) -> f64 {
        linalg::norm(&self.metric, a)
    }

    pub fn phi_of(&self, v: &Vector) -> Vector {
        &self.phi * v
    }

    pub fn eta_of(&self, v: &Vector) -> f64 {
        self.eta.dot(v)
    }

    /// `φ(∂_j)` as a vector field with its chart Jacobian.
    pub fn phi_column(&self, j: usize) -> VectorFieldJet {
        let d = self.dim();
        VectorFieldJet {
            value: self.phi.column(j).into_owned(),
            jacobian: Matrix::from_fn(d, d, |k, i| self.d_phi[i][(k, j)]),
        }
    }

    pub fn xi_field(&self) -> VectorFieldJet {
        let d = self.dim();
        VectorFieldJet {
            value: self.xi.clone(),
            jacobian: Matrix::from_fn(d, d, |k, i| self.d_xi[i][k]),
        }
    }
}

fn basis(d: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(d);
    v[i] = 1.0;
    v
}

/// Evaluates all tensor fields and their first derivatives at `p`.
pub fn evaluate_structure(amb: &AmbientStructure, p: &[f64], how: Derivatives) -> Result<StructureEval> {
    let d = amb.dim();
    assert_eq!(p.len(), d, "point has {} coordinates, ambient dimension {d}", p.len());
    match how {
        Derivatives::Jets => {
            let seeds = Jet2::seed(p);
            let env = Env::new(&amb.coords, &seeds);
            let eval_all = |list: &[Expr]| -> Result<Vec<Jet2>> {
                list.iter()
                    .map(|e| e.eval(&env).map_err(|err| Error::eval(p, err)))
                    .collect()
            };
            let phi = eval_all(&amb.phi)?;
            let xi = eval_all(&amb.xi)?;
            let eta = eval_all(&amb.eta)?;
            let metric = eval_all(&amb.metric)?;
            let mat = |js: &[Jet2]| Matrix::from_fn(d, d, |i, j| js[i * d + j].value());
            let dmat = |js: &[Jet2], k: usize| Matrix::from_fn(d, d, |i, j| js[i * d + j].gradient()[k]);
            let vec = |js: &[Jet2]| Vector::from_fn(d, |i, _| js[i].value());
            let dvec = |js: &[Jet2], k: usize| Vector::from_fn(d, |i, _| js[i].gradient()[k]);
            Ok(StructureEval {
                point: Vector::from_column_slice(p),
                phi: mat(&phi),
                xi: vec(&xi),
                eta: vec(&eta),
                metric: mat(&metric),
                d_metric: (0..d).map(|k| dmat(&metric, k)).collect(),
                d_phi: (0..d).map(|k| dmat(&phi, k)).collect(),
                d_xi: (0..d).map(|k| dvec(&xi, k)).collect(),
                d_eta: (0..d).map(|k| dvec(&eta, k)).collect(),
            })
        }
        Derivatives::CentralDifference { step } => {
            let values = |q: &[f64]| -> Result<[Vec<f64>; 4]> {
                let ev = |list: &[Expr]| -> Result<Vec<f64>> {
                    list.iter()
                        .map(|e| e.eval_f64(&amb.coords, q).map_err(|err| Error::eval(q, err)))
                        .collect()
                };
                Ok([ev(&amb.phi)?, ev(&amb.xi)?, ev(&amb.eta)?, ev(&amb.metric)?])
            };
            let center = values(p)?;
            let mut derivs: Vec<[Vec<f64>; 4]> = Vec::with_capacity(d);
            for k in 0..d {
                let mut qp = p.to_vec();
                let mut qm = p.to_vec();
                qp[k] += step;
                qm[k] -= step;
                let (fp, fm) = (values(&qp)?, values(&qm)?);
                let diff = |a: &Vec<f64>, b: &Vec<f64>| -> Vec<f64> {
                    a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * step)).collect()
                };
                derivs.push([
                    diff(&fp[0], &fm[0]),
                    diff(&fp[1], &fm[1]),
                    diff(&fp[2], &fm[2]),
                    diff(&fp[3], &fm[3]),
                ]);
            }
            let mat = |v: &[f64]| Matrix::from_row_slice(d, d, v);
            let vec = |v: &[f64]| Vector::from_column_slice(v);
            Ok(StructureEval {
                point: Vector::from_column_slice(p),
                phi: mat(&center[0]),
                xi: vec(&center[1]),
                eta: vec(&center[2]),
                metric: mat(&center[3]),
                d_metric: derivs.iter().map(|dv| mat(&dv[3])).collect(),
                d_phi: derivs.iter().map(|dv| mat(&dv[0])).collect(),
                d_xi: derivs.iter().map(|dv| vec(&dv[1])).collect(),
                d_eta: derivs.iter().map(|dv| vec(&dv[2])).collect(),
            })
        }
    }
}

/// Christoffel symbols `Γ^k_{ij}` of the Levi-Civita connection.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// `Γ(x, y)^k = Γ^k_{ij} x^i y^j`.
    pub fn contract(&self, x: &Vector, y: &Vector) -> Vector {
        let d = self.dim;
        Vector::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    s += self.get(k, i, j) * x[i] * y[j];
                }
            }
            s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Smallest-to-largest eigenvalue ratio a metric must exceed.
pub const METRIC_DEFINITENESS_TOL: f64 = 1e-12;

pub fn metric_inverse(se: &StructureEval) -> Result<Matrix> {
    let ratio = linalg::definiteness_ratio(&se.metric);
    if ratio <= METRIC_DEFINITENESS_TOL {
        return Err(Error::SingularMetric {
            point: se.point.as_slice().to_vec(),
            ratio,
        });
    }
    se.metric
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::SingularMetric {
            point: se.point.as_slice().to_vec(),
            ratio,
        })
}

/// `Γ^k_{ij} = ½ g^{kl} (∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
pub fn christoffel(se: &StructureEval) -> Result<Christoffel> {
    let d = se.dim();
    let ginv = metric_inverse(se)?;
    let dg = &se.d_metric;
    let mut data = vec![0.0; d * d * d];
    for i in 0..d {
        for j in i..d {
            // lowered[l] = ½ (∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let lowered: Vec<f64> = (0..d)
                .map(|l| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                .collect();
            for k in 0..d {
                let v: f64 = (0..d).map(|l| ginv[(k, l)] * lowered[l]).sum();
                data[(k * d + i) * d + j] = v;
                data[(k * d + j) * d + i] = v;
            }
        }
    }
    Ok(Christoffel { dim: d, data })
}

/// Max over `i,j,k` of `|∂_k g_ij − Γ^l_{ki} g_lj − Γ^l_{kj} g_il|`.
pub fn metric_compatibility_residual(se: &StructureEval, gamma: &Christoffel) -> f64 {
    let d = se.dim();
    let g = &se.metric;
    let mut worst: f64 = 0.0;
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut rhs = 0.0;
                for l in 0..d {
                    rhs += gamma.get(l, k, i) * g[(l, j)] + gamma.get(l, k, j) * g[(i, l)];
                }
                worst = worst.max((se.d_metric[k][(i, j)] - rhs).abs());
            }
        }
    }
    worst
}

/// A vector field known at one point through its value and chart Jacobian,
/// `jacobian[(k, i)] = ∂_i Y^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldJet {
    pub value: Vector,
    pub jacobian: Matrix,
}

impl VectorFieldJet {
    pub fn constant(value: Vector) -> VectorFieldJet {
        let d = value.len();
        VectorFieldJet {
            value,
            jacobian: Matrix::zeros(d, d),
        }
    }

    /// Evaluates component expressions over the ambient chart at `p`.
    pub fn from_exprs(amb: &AmbientStructure, components: &[Expr], p: &[f64]) -> Result<VectorFieldJet> {
        let d = amb.dim();
        let seeds = Jet2::seed(p);
        let env = Env::new(&amb.coords, &seeds);
        let jets: Vec<Jet2> = components
            .iter()
            .map(|e| e.eval(&env).map_err(|err| Error::eval(p, err)))
            .collect::<Result<_>>()?;
        Ok(VectorFieldJet {
            value: Vector::from_fn(d, |k, _| jets[k].value()),
            jacobian: Matrix::from_fn(d, d, |k, i| jets[k].gradient()[i]),
        })
    }

    /// Directional derivative `X(Y)` componentwise.
    pub fn derivative_along(&self, x: &Vector) -> Vector {
        &self.jacobian * x
    }
}

/// `(∇̃_X Y)^k = X^i ∂_i Y^k + Γ^k_{ij} X^i Y^j`.
pub fn ambient_covariant_derivative(gamma: &Christoffel, x: &Vector, y: &VectorFieldJet) -> Vector {
    y.derivative_along(x) + gamma.contract(x, &y.value)
}

/// Lie bracket `[X, Y]` of two ambient fields at the point.
pub fn ambient_bracket(x: &VectorFieldJet, y: &VectorFieldJet) -> Vector {
    y.derivative_along(&x.value) - x.derivative_along(&y.value)
}

/// Max-norm residuals of the almost contact metric axioms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlmostContactResiduals {
    pub phi_squared: f64,
    pub phi_xi: f64,
    pub eta_phi: f64,
    pub eta_xi: f64,
    pub compatibility: f64,
}

impl AlmostContactResiduals {
    pub fn max(&self) -> f64 {
        self.phi_squared
            .max(self.phi_xi)
            .max(self.eta_phi)
            .max(self.eta_xi)
            .max(self.compatibility)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max() < tol
    }
}

/// Residuals of `φ² = −I + η⊗ξ`, `φξ = 0`, `η∘φ = 0`, `η(ξ) = 1` and
/// `g(φX, φY) = g(X, Y) − η(X)η(Y)` over the chart basis.
pub fn check_almost_contact(se: &StructureEval) -> AlmostContactResiduals {
    let d = se.dim();
    let phi = &se.phi;
    let eta_xi = &se.xi * se.eta.transpose();
    let phi_sq = phi * phi + Matrix::identity(d, d) - eta_xi;
    let compat = phi.transpose() * &se.metric * phi - &se.metric + &se.eta * se.eta.transpose();
    AlmostContactResiduals {
        phi_squared: linalg::max_abs(&phi_sq),
        phi_xi: (phi * &se.xi).amax(),
        eta_phi: (se.eta.transpose() * phi).amax(),
        eta_xi: (se.eta.dot(&se.xi) - 1.0).abs(),
        compatibility: linalg::max_abs(&compat),
    }
}

/// Worst residuals of the Kenmotsu condition and of `∇̃_X ξ = X − η(X)ξ`
/// over chart-basis pairs, each normalized by the g-norms of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KenmotsuResiduals {
    pub phi_derivative: f64,
    /// Basis indices `(X, Y)` where the φ-residual is largest.
    pub worst_pair: (usize, usize),
    pub xi_derivative: f64,
    pub worst_xi_index: usize,
}

impl KenmotsuResiduals {
    pub fn max(&self) -> f64 {
        self.phi_derivative.max(self.xi_derivative)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max() < tol
    }
}

/// `(∇̃_X φ)Y` for chart basis fields, computed as `∇̃_X(φY) − φ(∇̃_X Y)`.
pub fn phi_derivative(se: &StructureEval, gamma: &Christoffel, a: usize, b: usize) -> Vector {
    let d = se.dim();
    let ea = basis(d, a);
    let phi_b = se.phi_column(b);
    let nabla_phi_b = ambient_covariant_derivative(gamma, &ea, &phi_b);
    let nabla_b = ambient_covariant_derivative(gamma, &ea, &VectorFieldJet::constant(basis(d, b)));
    nabla_phi_b - se.phi_of(&nabla_b)
}

pub fn check_kenmotsu(se: &StructureEval, gamma: &Christoffel) -> KenmotsuResiduals {
    let d = se.dim();
    let mut out = KenmotsuResiduals {
        phi_derivative: 0.0,
        worst_pair: (0, 0),
        xi_derivative: 0.0,
        worst_xi_index: 0,
    };
    let xi = se.xi_field();
    for a in 0..d {
        let ea = basis(d, a);
        let na = se.norm(&ea);
        let phi_a = se.phi_of(&ea);
        for b in 0..d {
            let eb = basis(d, b);
            let lhs = phi_derivative(se, gamma, a, b);
            let rhs = &se.xi * se.inner(&phi_a, &eb) - &phi_a * se.eta[b];
            let r = se.norm(&(lhs - rhs)) / (na * se.norm(&eb));
            if r > out.phi_derivative {
                out.phi_derivative = r;
                out.worst_pair = (a, b);
            }
        }
        let nabla_xi = ambient_covariant_derivative(gamma, &ea, &xi);
        let expected = &ea - &se.xi * se.eta[a];
        let r = se.norm(&(nabla_xi - expected)) / na;
        if r > out.xi_derivative {
            out.xi_derivative = r;
            out.worst_xi_index = a;
        }
    }
    out
}

/// Coordinate names shared by the builtin ambients on ℝ⁹.
pub fn r9_coords() -> Vec<String> {
    ["x1", "x2", "x3", "x4", "y1", "y2", "y3", "y4", "z"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// `φ(∂x_i) = −∂y_i`, `φ(∂y_i) = ∂x_i`, `φ(∂z) = 0` on ℝ⁹.
fn standard_phi() -> Vec<Vec<Expr>> {
    let mut phi = vec![vec![Expr::num(0.0); 9]; 9];
    for i in 0..4 {
        phi[4 + i][i] = Expr::neg(Expr::num(1.0));
        phi[i][4 + i] = Expr::num(1.0);
    }
    phi
}

fn diagonal(entries: Vec<Expr>) -> Vec<Vec<Expr>> {
    let d = entries.len();
    let mut m = vec![vec![Expr::num(0.0); d]; d];
    for (i, e) in entries.into_iter().enumerate() {
        m[i][i] = e;
    }
    m
}

fn unit_dz() -> Vec<Expr> {
    let mut v = vec![Expr::num(0.0); 9];
    v[8] = Expr::num(1.0);
    v
}

pub const EXAMPLE1_R9: &str = "example1_r9";
pub const EXAMPLE2_KENMOTSU: &str = "example2_kenmotsu";
pub const EXAMPLE2_PAPER_LITERAL: &str = "example2_paper_literal";

pub fn builtin_ambient_names() -> [&'static str; 3] {
    [EXAMPLE1_R9, EXAMPLE2_KENMOTSU, EXAMPLE2_PAPER_LITERAL]
}

/// Builtin ambients:
///
/// * `example1_r9`: the standard structure on ℝ⁹ with the Euclidean metric,
///   `ξ = ∂z`, `η = dz`. Almost contact metric, not Kenmotsu.
/// * `example2_kenmotsu`: `ℝ ×_{e^z} ℂ⁴` with `g = dz² + e^{2z} Σ(dx_i² + dy_i²)`,
///   `ξ = ∂z`, `η = dz`. Kenmotsu.
/// * `example2_paper_literal`: `g = e^{2z}⟨,⟩`, `ξ = e^z ∂z`, `η = e^z dz`,
///   for which `η(ξ) = e^{2z}`. Kept as a negative control.
pub fn builtin_ambient(name: &str) -> Result<AmbientStructure> {
    let exp2z = || parse("exp(2*z)").expect("literal");
    let metric = match name {
        EXAMPLE1_R9 => diagonal(vec![Expr::num(1.0); 9]),
        EXAMPLE2_KENMOTSU => {
            let mut d: Vec<Expr> = (0..8).map(|_| exp2z()).collect();
            d.push(Expr::num(1.0));
            diagonal(d)
        }
        EXAMPLE2_PAPER_LITERAL => diagonal((0..9).map(|_| exp2z()).collect()),
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    };
    let (xi, eta) = if name == EXAMPLE2_PAPER_LITERAL {
        let mut v = vec![Expr::num(0.0); 9];
        v[8] = parse("exp(z)").expect("literal");
        (v.clone(), v)
    } else {
        (unit_dz(), unit_dz())
    };
    AmbientStructure::new(name, r9_coords(), standard_phi(), xi, eta, metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(name: &str, p: &[f64]) -> StructureEval {
        evaluate_structure(&builtin_ambient(name).unwrap(), p, Derivatives::Jets).unwrap()
    }

    #[test]
    fn example1_phi_swaps_x_and_y() {
        let se = eval(EXAMPLE1_R9, &[0.3; 9]);
        for i in 0..4 {
            let mut ex = Vector::zeros(9);
            ex[i] = 1.0;
            let mut ey = Vector::zeros(9);
            ey[4 + i] = 1.0;
            assert_eq!(se.phi_of(&ex), -&ey);
            assert_eq!(se.phi_of(&ey), ex);
        }
        assert_eq!(se.metric, Matrix::identity(9, 9));
    }

    #[test]
    fn example2_metric_values() {
        let se = eval(EXAMPLE2_KENMOTSU, &[0.0; 9]);
        assert_eq!(se.metric, Matrix::identity(9, 9));
        let mut p = [0.0; 9];
        p[8] = 1.0;
        let se = eval(EXAMPLE2_KENMOTSU, &p);
        assert!((se.metric[(0, 0)] - 7.38905609893065).abs() < 1e-12);
    }

    #[test]
    fn example2_christoffel_entries() {
        let mut p = [0.1; 9];
        p[8] = 0.4;
        let se = eval(EXAMPLE2_KENMOTSU, &p);
        let gamma = christoffel(&se).unwrap();
        // Γ^{x1}_{x1 z} = 1, Γ^z_{x1 x1} = −e^{2z}
        assert!((gamma.get(0, 0, 8) - 1.0).abs() < 1e-14);
        assert!((gamma.get(8, 0, 0) + (0.8f64).exp()).abs() < 1e-14);
        assert!(metric_compatibility_residual(&se, &gamma) < 1e-12);
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let se = eval(EXAMPLE1_R9, &[0.5; 9]);
        assert_eq!(christoffel(&se).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn covariant_derivative_of_dx1_along_itself() {
        let se = eval(EXAMPLE2_KENMOTSU, &[0.0; 9]);
        let gamma = christoffel(&se).unwrap();
        let mut e = Vector::zeros(9);
        e[0] = 1.0;
        let v = ambient_covariant_derivative(&gamma, &e, &VectorFieldJet::constant(e.clone()));
        let mut expected = Vector::zeros(9);
        expected[8] = -1.0;
        assert!((v - expected).amax() < 1e-15);
    }

    #[test]
    fn literal_example2_breaks_eta_xi() {
        let mut p = [0.0; 9];
        p[8] = 0.5;
        let r = check_almost_contact(&eval(EXAMPLE2_PAPER_LITERAL, &p));
        assert!((r.eta_xi - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        assert!(!r.passes(1e-9));
    }

    #[test]
    fn example1_is_not_kenmotsu_at_x1_y1() {
        let se = eval(EXAMPLE1_R9, &[0.0; 9]);
        let gamma = christoffel(&se).unwrap();
        let k = check_kenmotsu(&se, &gamma);
        assert_eq!(k.worst_pair, (0, 4));
        assert!((k.phi_derivative - 1.0).abs() < 1e-15);
        assert!(!k.passes(0.5));
    }

    #[test]
    fn singular_metric_rejected() {
        let mut m = diagonal(vec![Expr::num(1.0); 3]);
        m[2][2] = parse("z - z").unwrap();
        let amb = AmbientStructure::new(
            "degenerate",
            vec!["x".into(), "y".into(), "z".into()],
            diagonal(vec![Expr::num(0.0); 3]),
            vec![Expr::num(0.0); 3],
            vec![Expr::num(0.0); 3],
            m,
        )
        .unwrap();
        let se = evaluate_structure(&amb, &[0.0, 0.0, 1.0], Derivatives::Jets).unwrap();
        assert!(matches!(christoffel(&se), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn validation_collects_every_problem() {
        let err = AmbientStructure::new(
            "bad",
            vec!["x".into(), "y".into()],
            diagonal(vec![Expr::num(0.0); 2]),
            vec![Expr::var("w")],
            vec![Expr::num(0.0); 2],
            diagonal(vec![Expr::num(1.0); 2]),
        )
        .unwrap_err();
        match err {
            Error::Invalid(list) => {
                assert!(list.iter().any(|m| m.contains("not odd")));
                assert!(list.iter().any(|m| m.contains("xi has 1")));
                assert!(list.iter().any(|m| m.contains("unknown coordinate `w`")));
            }
            other => panic!("{other:?}"),
        }
    }
}
