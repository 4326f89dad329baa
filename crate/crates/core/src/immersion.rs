//! Parametric immersions `ψ: U ⊂ ℝⁿ → M̃` and their pointwise extrinsic
//! geometry: frames, induced metric, second fundamental form, shape
//! operators and the induced connection.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::expr::{parse, Env, Expr, Jet2};
use crate::linalg::{self, Matrix, Vector};
use crate::manifold::{christoffel, evaluate_structure, AmbientStructure, Christoffel, Derivatives, StructureEval};

/// Smallest admissible ratio of singular values of the g-orthonormalized
/// Jacobian.
pub const RANK_TOL: f64 = 1e-8;

/// Tangential residual above which a vector is not accepted as normal,
/// relative to its g-norm.
pub const NORMALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Immersion {
    params: Vec<String>,
    target: Vec<Expr>,
    ambient: AmbientStructure,
}

impl Immersion {
    pub fn new(params: Vec<String>, target: Vec<Expr>, ambient: AmbientStructure) -> Result<Immersion> {
        let mut problems = Vec::new();
        if target.len() != ambient.dim() {
            problems.push(format!(
                "immersion target has {} components but the ambient dimension is {}",
                target.len(),
                ambient.dim()
            ));
        }
        if params.is_empty() {
            problems.push("immersion has no parameters".to_string());
        }
        if params.len() > ambient.dim() {
            problems.push(format!(
                "{} parameters exceed the ambient dimension {}",
                params.len(),
                ambient.dim()
            ));
        }
        for (i, p) in params.iter().enumerate() {
            if params[..i].contains(p) {
                problems.push(format!("parameter `{p}` declared twice"));
            }
            if p == "pi" || p == "e" {
                problems.push(format!("parameter name `{p}` is reserved"));
            }
        }
        for (i, e) in target.iter().enumerate() {
            for v in e.variables() {
                if !params.contains(&v) {
                    problems.push(format!("target component {i} `{e}` references undeclared parameter `{v}`"));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Invalid(problems));
        }
        Ok(Immersion { params, target, ambient })
    }

    /// Builds an immersion from target strings.
    pub fn from_strs(params: &[&str], target: &[&str], ambient: AmbientStructure) -> Result<Immersion> {
        let mut problems = Vec::new();
        let exprs: Vec<Expr> = target
            .iter()
            .map(|s| {
                parse(s).unwrap_or_else(|err| {
                    problems.push(format!("target `{s}`: {err}"));
                    Expr::num(0.0)
                })
            })
            .collect();
        if !problems.is_empty() {
            return Err(Error::Invalid(problems));
        }
        Immersion::new(params.iter().map(|s| s.to_string()).collect(), exprs, ambient)
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn target(&self) -> &[Expr] {
        &self.target
    }

    pub fn ambient(&self) -> &AmbientStructure {
        &self.ambient
    }

    pub fn n(&self) -> usize {
        self.params.len()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    /// `ψ(u)` in ambient chart coordinates.
    pub fn map(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.target
            .iter()
            .map(|e| e.eval_f64(&self.params, u).map_err(|err| Error::eval(u, err)))
            .collect()
    }

    /// Full pointwise geometry with exact jets.
    pub fn at(&self, u: &[f64]) -> Result<PointGeometry> {
        PointGeometry::new(self, u, Derivatives::Jets)
    }

    /// Jacobian columns `∂ψ/∂uᵃ` as a frame, with its rank check.
    pub fn tangent_frame(&self, u: &[f64]) -> Result<Frame> {
        Ok(self.at(u)?.tangent_frame())
    }

    pub fn induced_metric(&self, u: &[f64]) -> Result<Matrix> {
        Ok(self.at(u)?.gram.clone())
    }

    pub fn normal_frame(&self, u: &[f64]) -> Result<Frame> {
        let geo = self.at(u)?;
        Ok(Frame::new(geo.point.clone(), geo.normal_on.clone(), &geo.structure.metric))
    }
}

/// Ambient vectors at one base point with their g-Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub base: Vector,
    pub vectors: Vec<Vector>,
    pub gram: Matrix,
}

impl Frame {
    pub fn new(base: Vector, vectors: Vec<Vector>, metric: &Matrix) -> Frame {
        let gram = linalg::gram(metric, &vectors);
        Frame { base, vectors, gram }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// g-orthonormalizes in input order.
    pub fn orthonormalize(&self, metric: &Matrix) -> Result<Frame> {
        let vectors = linalg::orthonormalize(metric, &self.vectors)?;
        Ok(Frame::new(self.base.clone(), vectors, metric))
    }

    /// Max deviation of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let k = self.len();
        linalg::max_abs(&(&self.gram - Matrix::identity(k, k)))
    }
}

/// Everything about the immersion at one parameter point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub u: Vec<f64>,
    pub point: Vector,
    pub structure: StructureEval,
    pub gamma: Christoffel,
    /// `dim × n`, column `a` is `∂ₐψ`.
    pub jacobian: Matrix,
    /// `second[a]` is `dim × n` with column `b` equal to `∂ₐ∂ᵦψ`.
    pub second: Vec<Matrix>,
    /// Induced metric `G = Jᵀ g J`.
    pub gram: Matrix,
    gram_chol: Cholesky<f64, Dyn>,
    /// g-orthonormalized Jacobian columns, in parameter order.
    pub tangent_on: Vec<Vector>,
    /// g-orthonormal completion of the tangent space.
    pub normal_on: Vec<Vector>,
    /// `h(∂ₐ, ∂ᵦ)`, row-major `n × n`.
    h_basis: Vec<Vector>,
    /// `∂_c G` for each parameter `c`.
    d_gram: Vec<Matrix>,
    /// `∂_a g` along the immersion.
    d_metric_param: Vec<Matrix>,
}

impl PointGeometry {
    pub fn new(imm: &Immersion, u: &[f64], how: Derivatives) -> Result<PointGeometry> {
        let n = imm.n();
        let dim = imm.ambient.dim();
        assert_eq!(u.len(), n, "parameter point has {} entries, immersion has {n} parameters", u.len());
        let (point, jacobian, second) = match how {
            Derivatives::Jets => {
                let seeds = Jet2::seed(u);
                let env = Env::new(&imm.params, &seeds);
                let jets: Vec<Jet2> = imm
                    .target
                    .iter()
                    .map(|e| e.eval(&env).map_err(|err| Error::eval(u, err)))
                    .collect::<Result<_>>()?;
                let point = Vector::from_fn(dim, |i, _| jets[i].value());
                let jac = Matrix::from_fn(dim, n, |i, a| jets[i].gradient()[a]);
                let second = (0..n)
                    .map(|a| Matrix::from_fn(dim, n, |i, b| jets[i].hessian(a, b)))
                    .collect();
                (point, jac, second)
            }
            Derivatives::CentralDifference { step } => {
                let f = |q: &[f64]| -> Result<Vector> { Ok(Vector::from_vec(imm.map(q)?)) };
                let shifted = |moves: &[(usize, f64)]| -> Result<Vector> {
                    let mut q = u.to_vec();
                    for &(a, s) in moves {
                        q[a] += s;
                    }
                    f(&q)
                };
                let point = f(u)?;
                let mut jac = Matrix::zeros(dim, n);
                for a in 0..n {
                    let col = (shifted(&[(a, step)])? - shifted(&[(a, -step)])?) / (2.0 * step);
                    jac.set_column(a, &col);
                }
                let mut second = vec![Matrix::zeros(dim, n); n];
                for a in 0..n {
                    for b in a..n {
                        let col = if a == b {
                            (shifted(&[(a, step)])? - &point * 2.0 + shifted(&[(a, -step)])?) / (step * step)
                        } else {
                            (shifted(&[(a, step), (b, step)])? - shifted(&[(a, step), (b, -step)])?
                                - shifted(&[(a, -step), (b, step)])?
                                + shifted(&[(a, -step), (b, -step)])?)
                                / (4.0 * step * step)
                        };
                        second[a].set_column(b, &col);
                        second[b].set_column(a, &col);
                    }
                }
                (point, jac, second)
            }
        };
        let structure = evaluate_structure(&imm.ambient, point.as_slice(), how)?;
        let gamma = christoffel(&structure)?;
        let g = &structure.metric;

        // Rank: singular values of the Jacobian in a g-orthonormal ambient basis.
        let chol_g = g.clone().cholesky().ok_or_else(|| Error::SingularMetric {
            point: point.as_slice().to_vec(),
            ratio: linalg::definiteness_ratio(g),
        })?;
        let scaled = chol_g.l().transpose() * &jacobian;
        let sv = scaled.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > RANK_TOL * smax.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient {
                point: u.to_vec(),
                sigma: if smax > 0.0 { smin / smax } else { 0.0 },
            });
        }

        let gram = jacobian.transpose() * g * &jacobian;
        let gram = (&gram + gram.transpose()) * 0.5;
        let gram_chol = gram.clone().cholesky().ok_or_else(|| Error::RankDeficient {
            point: u.to_vec(),
            sigma: 0.0,
        })?;
        let cols: Vec<Vector> = (0..n).map(|a| jacobian.column(a).into_owned()).collect();
        let tangent_on = linalg::orthonormalize(g, &cols)?;
        let chart: Vec<Vector> = (0..dim)
            .map(|i| {
                let mut e = Vector::zeros(dim);
                e[i] = 1.0;
                e
            })
            .collect();
        let normal_on = linalg::complete(g, &tangent_on, &chart, dim);
        if normal_on.len() != dim - n {
            return Err(Error::Precondition(format!(
                "normal completion produced {} vectors, expected {}",
                normal_on.len(),
                dim - n
            )));
        }

        let d_metric_param: Vec<Matrix> = (0..n)
            .map(|a| {
                let mut m = Matrix::zeros(dim, dim);
                for i in 0..dim {
                    let c = jacobian[(i, a)];
                    if c != 0.0 {
                        m += &structure.d_metric[i] * c;
                    }
                }
                m
            })
            .collect();
        let d_gram: Vec<Matrix> = (0..n)
            .map(|c| {
                let hc = &second[c];
                let t = hc.transpose() * g * &jacobian;
                &t + t.transpose() + jacobian.transpose() * &d_metric_param[c] * &jacobian
            })
            .collect();

        let mut geo = PointGeometry {
            u: u.to_vec(),
            point,
            structure,
            gamma,
            jacobian,
            second,
            gram,
            gram_chol,
            tangent_on,
            normal_on,
            h_basis: Vec::new(),
            d_gram,
            d_metric_param,
        };
        let mut h_basis = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let v = geo.ambient_nabla_basis(a, b);
                h_basis.push(geo.normal_part(&v));
            }
        }
        // Jets give an exactly symmetric h; finite differences only up to
        // rounding, so symmetrize there.
        if matches!(how, Derivatives::CentralDifference { .. }) {
            for a in 0..n {
                for b in (a + 1)..n {
                    let avg = (&h_basis[a * n + b] + &h_basis[b * n + a]) * 0.5;
                    h_basis[a * n + b] = avg.clone();
                    h_basis[b * n + a] = avg;
                }
            }
        }
        geo.h_basis = h_basis;
        Ok(geo)
    }

    pub fn n(&self) -> usize {
        self.jacobian.ncols()
    }

    pub fn dim(&self) -> usize {
        self.jacobian.nrows()
    }

    pub fn metric(&self) -> &Matrix {
        &self.structure.metric
    }

    pub fn inner(&self, a: &Vector, b: &Vector) -> f64 {
        self.structure.inner(a, b)
    }

    pub fn norm(&self, a: &Vector) -> f64 {
        self.structure.norm(a)
    }

    /// Induced inner product of parameter vectors.
    pub fn param_inner(&self, x: &Vector, y: &Vector) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    pub fn param_norm(&self, x: &Vector) -> f64 {
        self.param_inner(x, x).max(0.0).sqrt()
    }

    /// Pushforward `dψ(x)` of a parameter vector.
    pub fn push(&self, x: &Vector) -> Vector {
        &self.jacobian * x
    }

    /// Parameter coefficients `c` of the tangential part `J c` of an ambient
    /// vector.
    pub fn coeffs(&self, v: &Vector) -> Vector {
        let rhs = self.jacobian.transpose() * (self.metric() * v);
        self.gram_chol.solve(&rhs)
    }

    /// Tangential projection through the orthonormal tangent frame.
    pub fn tangential(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for e in &self.tangent_on {
            out.axpy(self.inner(e, v), e, 1.0);
        }
        out
    }

    pub fn normal_part(&self, v: &Vector) -> Vector {
        v - self.tangential(v)
    }

    pub fn tangent_frame(&self) -> Frame {
        let cols = (0..self.n()).map(|a| self.jacobian.column(a).into_owned()).collect();
        Frame::new(self.point.clone(), cols, self.metric())
    }

    /// Orthonormal tangent frame expressed as parameter vectors.
    pub fn tangent_on_params(&self) -> Vec<Vector> {
        self.tangent_on.iter().map(|e| self.coeffs(e)).collect()
    }

    fn ambient_nabla_basis(&self, a: usize, b: usize) -> Vector {
        let ja = self.jacobian.column(a).into_owned();
        let jb = self.jacobian.column(b).into_owned();
        self.second[a].column(b).into_owned() + self.gamma.contract(&ja, &jb)
    }

    /// `∇̃_X Y` for constant-coefficient parameter fields `X`, `Y`.
    pub fn ambient_nabla(&self, x: &Vector, y: &Vector) -> Vector {
        let n = self.n();
        let mut out = Vector::zeros(self.dim());
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if y[b] != 0.0 {
                    out += self.ambient_nabla_basis(a, b) * (x[a] * y[b]);
                }
            }
        }
        out
    }

    /// Induced connection `∇_X Y` for constant-coefficient parameter fields,
    /// as parameter coefficients: the tangential part of `∇̃_X Y`.
    pub fn nabla(&self, x: &Vector, y: &Vector) -> Vector {
        self.coeffs(&self.ambient_nabla(x, y))
    }

    /// Second fundamental form of parameter vectors.
    pub fn h(&self, x: &Vector, y: &Vector) -> Vector {
        let n = self.n();
        let mut out = Vector::zeros(self.dim());
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if y[b] != 0.0 {
                    out.axpy(x[a] * y[b], &self.h_basis[a * n + b], 1.0);
                }
            }
        }
        out
    }

    /// `h` of two ambient tangent vectors.
    pub fn h_ambient(&self, x: &Vector, y: &Vector) -> Vector {
        self.h(&self.coeffs(x), &self.coeffs(y))
    }

    /// Relative tangential residual of `v`: `‖v^T‖ / ‖v‖`.
    pub fn tangential_ratio(&self, v: &Vector) -> f64 {
        let nv = self.norm(v);
        if nv == 0.0 {
            0.0
        } else {
            self.norm(&self.tangential(v)) / nv
        }
    }

    /// Relative normal residual of `v`: `‖v^⊥‖ / ‖v‖`.
    pub fn normal_ratio(&self, v: &Vector) -> f64 {
        let nv = self.norm(v);
        if nv == 0.0 {
            0.0
        } else {
            self.norm(&self.normal_part(v)) / nv
        }
    }

    /// `∂ₐT` for the tangential projector `T = J G⁻¹ Jᵀ g`.
    fn d_projector(&self, a: usize) -> Matrix {
        let g = self.metric();
        let j = &self.jacobian;
        let ginv = self.gram_chol.inverse();
        let ha = &self.second[a];
        let d_ginv = -(&ginv * &self.d_gram[a] * &ginv);
        let jt_g = j.transpose() * g;
        ha * &ginv * &jt_g
            + j * d_ginv * &jt_g
            + j * &ginv * ha.transpose() * g
            + j * &ginv * j.transpose() * &self.d_metric_param[a]
    }

    /// `A_N X` for a normal vector `N` and parameter vector `X`, returned as
    /// an ambient tangent vector. Computed from `−∇̃_X N` with `N` extended
    /// as `(I − T(u))N`, independently of `h`.
    pub fn shape_operator(&self, normal: &Vector, x: &Vector) -> Result<Vector> {
        let r = self.tangential_ratio(normal);
        if r > NORMALITY_TOL {
            return Err(Error::NotNormal { residual: r });
        }
        let mut acc = Vector::zeros(self.dim());
        for a in 0..self.n() {
            if x[a] == 0.0 {
                continue;
            }
            let ja = self.jacobian.column(a).into_owned();
            let term = self.d_projector(a) * normal - self.gamma.contract(&ja, normal);
            acc.axpy(x[a], &term, 1.0);
        }
        Ok(self.tangential(&acc))
    }

    /// Christoffel symbols of the induced metric from `∂G`, indexed
    /// `[c][(a, b)] = Γ^c_{ab}`.
    pub fn induced_christoffel(&self) -> Vec<Matrix> {
        let n = self.n();
        let ginv = self.gram_chol.inverse();
        let dg = &self.d_gram;
        let lowered: Vec<Matrix> = (0..n)
            .map(|d| Matrix::from_fn(n, n, |a, b| 0.5 * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)])))
            .collect();
        (0..n)
            .map(|c| {
                let mut m = Matrix::zeros(n, n);
                for d in 0..n {
                    m += &lowered[d] * ginv[(c, d)];
                }
                m
            })
            .collect()
    }

    /// `∂_c G_ab`.
    pub fn d_gram(&self, c: usize) -> &Matrix {
        &self.d_gram[c]
    }

    /// Mean curvature vector `(1/n) Σ h(eᵢ, eᵢ)`.
    pub fn mean_curvature(&self) -> Vector {
        let mut out = Vector::zeros(self.dim());
        for e in self.tangent_on_params() {
            out += self.h(&e, &e);
        }
        out / self.n() as f64
    }

    /// `‖h‖² = Σ g(h(eᵢ, eⱼ), e_r)²` over the orthonormal tangent frame
    /// `frame` (parameter vectors) and an orthonormal normal frame.
    pub fn h_norm_squared(&self, frame: &[Vector], normals: &[Vector]) -> f64 {
        let mut s = 0.0;
        for x in frame {
            for y in frame {
                let hv = self.h(x, y);
                for nr in normals {
                    s += self.inner(&hv, nr).powi(2);
                }
            }
        }
        s
    }
}
