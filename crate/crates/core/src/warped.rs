//! Warped products `M_T ×_f M_θ`: block structure of the induced metric, the
//! warp connection, the ξ-conditions, the mixed second fundamental form
//! identities, the characterization `A_{FZ}φX − A_{FPZ}X = sin²θ(X(μ) − η(X))Z`,
//! and the lower bound for `‖h‖²` with its equality case.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::decomposition::{p_param, pf_split};
use crate::distribution::{Ops, SplitSpec, ANGLE_TOL};
use crate::error::{Error, Result};
use crate::expr::{parse, Env, Expr, Jet2};
use crate::immersion::{Immersion, PointGeometry};
use crate::linalg::{self, Matrix, Vector};

/// Declared warped-product structure, by parameter name.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpSpec {
    pub factor1: Vec<String>,
    pub factor2: Vec<String>,
    pub warping: Expr,
    pub slant_theta: Option<f64>,
}

/// Text form used in scenario documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpDoc {
    pub factor1: Vec<String>,
    pub factor2: Vec<String>,
    pub warping: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slant_theta: Option<String>,
}

impl WarpSpec {
    pub fn from_doc(doc: &WarpDoc, problems: &mut Vec<String>) -> Option<WarpSpec> {
        let warping = match parse(&doc.warping) {
            Ok(e) => Some(e),
            Err(err) => {
                problems.push(format!("warping `{}`: {err}", doc.warping));
                None
            }
        };
        let slant_theta = match &doc.slant_theta {
            None => Some(None),
            Some(text) => match parse(text).map(|e| (e.is_constant(), e)) {
                Ok((true, e)) => match e.eval_f64(&[], &[]) {
                    Ok(v) => Some(Some(v)),
                    Err(err) => {
                        problems.push(format!("slant_theta `{text}`: {err}"));
                        None
                    }
                },
                Ok((false, _)) => {
                    problems.push(format!("slant_theta `{text}` must be a constant expression"));
                    None
                }
                Err(err) => {
                    problems.push(format!("slant_theta `{text}`: {err}"));
                    None
                }
            },
        };
        Some(WarpSpec {
            factor1: doc.factor1.clone(),
            factor2: doc.factor2.clone(),
            warping: warping?,
            slant_theta: slant_theta?,
        })
    }

    pub fn to_doc(&self) -> WarpDoc {
        WarpDoc {
            factor1: self.factor1.clone(),
            factor2: self.factor2.clone(),
            warping: self.warping.to_string(),
            slant_theta: self.slant_theta.map(|t| format!("{t:?}")),
        }
    }

    /// Static checks: factors partition the parameters, the warping depends
    /// on first-factor parameters only.
    pub fn validate(&self, params: &[String], problems: &mut Vec<String>) {
        for name in self.factor1.iter().chain(&self.factor2) {
            if !params.contains(name) {
                problems.push(format!("warp factor names unknown parameter `{name}`"));
            }
        }
        for p in params {
            let c = self.factor1.iter().chain(&self.factor2).filter(|n| *n == p).count();
            if c == 0 {
                problems.push(format!("parameter `{p}` belongs to neither warp factor"));
            } else if c > 1 {
                problems.push(format!("parameter `{p}` listed more than once across warp factors"));
            }
        }
        for v in self.warping.variables() {
            if self.factor2.contains(&v) {
                problems.push(format!(
                    "warping function `{}` references second-factor parameter `{v}`; it must depend on the first factor only",
                    self.warping
                ));
            } else if !self.factor1.contains(&v) {
                problems.push(format!("warping function references unknown parameter `{v}`"));
            }
        }
        if let Some(t) = self.slant_theta {
            if !(0.0..=FRAC_PI_2 + ANGLE_TOL).contains(&t) {
                problems.push(format!("slant_theta {t} outside [0, pi/2]"));
            }
        }
    }

    pub fn resolve(&self, imm: &Immersion) -> Result<Warp> {
        let mut problems = Vec::new();
        self.validate(imm.params(), &mut problems);
        if !problems.is_empty() {
            return Err(Error::Invalid(problems));
        }
        let idx = |names: &[String]| -> Vec<usize> {
            names.iter().map(|nm| imm.param_index(nm).expect("validated")).collect()
        };
        Ok(Warp {
            f1: idx(&self.factor1),
            f2: idx(&self.factor2),
            warping: self.warping.clone(),
            params: imm.params().to_vec(),
        })
    }
}

/// A [`WarpSpec`] with parameter names resolved to indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Warp {
    pub f1: Vec<usize>,
    pub f2: Vec<usize>,
    pub warping: Expr,
    params: Vec<String>,
}

/// `f` and the parameter gradient of `ln f` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpPoint {
    pub f: f64,
    pub dlog: Vector,
}

impl WarpPoint {
    /// `X(ln f)` for a parameter vector.
    pub fn along(&self, x: &Vector) -> f64 {
        self.dlog.dot(x)
    }
}

impl Warp {
    pub fn at(&self, u: &[f64]) -> Result<WarpPoint> {
        let seeds = Jet2::seed(u);
        let env = Env::new(&self.params, &seeds);
        let j = self.warping.eval(&env).map_err(|err| Error::eval(u, err))?;
        let f = j.value();
        if !(f > 0.0) {
            return Err(Error::Precondition(format!(
                "warping function is {f} at {u:?}; it must be positive"
            )));
        }
        Ok(WarpPoint {
            f,
            dlog: Vector::from_iterator(u.len(), j.gradient().iter().map(|d| d / f)),
        })
    }

    fn unit(&self, i: usize) -> Vector {
        Vector::from_fn(self.params.len(), |k, _| (k == i) as u8 as f64)
    }

    pub fn factor1_basis(&self) -> Vec<Vector> {
        self.f1.iter().map(|&i| self.unit(i)).collect()
    }

    pub fn factor2_basis(&self) -> Vec<Vector> {
        self.f2.iter().map(|&i| self.unit(i)).collect()
    }

    /// Factor-2 block of the induced metric divided by `f²`.
    pub fn quotient(&self, gram: &Matrix, f: f64) -> Matrix {
        Matrix::from_fn(self.f2.len(), self.f2.len(), |a, b| gram[(self.f2[a], self.f2[b])] / (f * f))
    }
}

/// Max `|G_ab| / √(G_aa G_bb)` between the two factors.
pub fn block_cross(geo: &PointGeometry, warp: &Warp) -> f64 {
    let g = &geo.gram;
    let mut worst: f64 = 0.0;
    for &a in &warp.f1 {
        for &b in &warp.f2 {
            worst = worst.max(g[(a, b)].abs() / (g[(a, a)] * g[(b, b)]).sqrt());
        }
    }
    worst
}

/// Max relative change of `G₂₂/f²` when the first-factor parameters of `u`
/// are replaced by those of each point in `others`.
pub fn block_quotient_variation(imm: &Immersion, warp: &Warp, u: &[f64], others: &[Vec<f64>]) -> Result<f64> {
    let base = warp.quotient(&imm.induced_metric(u)?, warp.at(u)?.f);
    let scale = linalg::max_abs(&base).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for o in others {
        let mut v = u.to_vec();
        for &i in &warp.f1 {
            v[i] = o[i];
        }
        let q = warp.quotient(&imm.induced_metric(&v)?, warp.at(&v)?.f);
        worst = worst.max(linalg::max_abs(&(q - &base)) / scale);
    }
    Ok(worst)
}

/// Max over factor basis pairs of `‖∇_X V − X(ln f)V‖ / (‖X‖‖V‖)` and the
/// same for `∇_V X`, with `∇` from the induced Christoffel symbols.
pub fn warp_connection_residual(geo: &PointGeometry, warp: &Warp, wp: &WarpPoint) -> f64 {
    let gam = geo.induced_christoffel();
    let n = geo.n();
    let mut worst: f64 = 0.0;
    for &a in &warp.f1 {
        for &b in &warp.f2 {
            let nabla = Vector::from_fn(n, |c, _| gam[c][(a, b)]);
            let mut expected = Vector::zeros(n);
            expected[b] = wp.dlog[a];
            let r = geo.param_norm(&(nabla - expected)) / (geo.gram[(a, a)] * geo.gram[(b, b)]).sqrt();
            worst = worst.max(r);
        }
    }
    worst
}

/// Orthonormal frame of the first factor in the induced metric, as
/// parameter vectors.
fn factor1_frame(geo: &PointGeometry, warp: &Warp) -> Result<Vec<Vector>> {
    linalg::orthonormalize(&geo.gram, &warp.factor1_basis())
}

/// `‖∇ᵀ ln f‖² = Σ eᵢ(ln f)²` over an orthonormal first-factor frame.
pub fn warp_gradient_norm(geo: &PointGeometry, warp: &Warp, wp: &WarpPoint) -> Result<f64> {
    Ok(factor1_frame(geo, warp)?.iter().map(|e| wp.along(e).powi(2)).sum())
}

/// Outcome of the ξ-conditions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiConditions {
    /// ξ in the first factor: `|ξ(ln f) − 1|` and max `‖h(Z, ξ)‖/‖Z‖`.
    FirstFactor { log_derivative: f64, h_mixed: f64 },
    /// ξ in the second factor: tangency forces `f` constant; reports max
    /// `|X(ln f)|` over a unit first-factor frame.
    SecondFactor { max_log_derivative: f64 },
}

pub fn xi_conditions(geo: &PointGeometry, warp: &Warp, wp: &WarpPoint) -> Result<XiConditions> {
    let xi = geo.coeffs(&geo.structure.xi);
    let n = geo.n();
    let in_f2: f64 = warp.f2.iter().map(|&i| xi[i].abs()).sum();
    let in_f1: f64 = warp.f1.iter().map(|&i| xi[i].abs()).sum();
    if in_f2 > in_f1 {
        let m = factor1_frame(geo, warp)?
            .iter()
            .map(|e| wp.along(e).abs())
            .fold(0.0, f64::max);
        return Ok(XiConditions::SecondFactor { max_log_derivative: m });
    }
    let log_derivative = (wp.along(&xi) - 1.0).abs();
    // Over every coordinate direction: tangency of ∇̃_X ξ in a Kenmotsu
    // ambient gives h(X, ξ) = 0 for all X, and that is checked, not assumed.
    let mut h_mixed: f64 = 0.0;
    for a in 0..n {
        let e = Vector::from_fn(n, |k, _| (k == a) as u8 as f64);
        h_mixed = h_mixed.max(geo.norm(&geo.h(&e, &xi)) / geo.param_norm(&e));
    }
    Ok(XiConditions::FirstFactor { log_derivative, h_mixed })
}

/// Residuals of the mixed second fundamental form identities at one tuple
/// `X, Y ∈ TM_T`, `Z, W ∈ TM_θ`, each normalized by the input norms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MixedIdentities {
    /// `g(h(X,Z),FW) = (η(X) − X ln f)g(Z,PW) − φX(ln f)g(Z,W)`
    pub fw: f64,
    /// `g(h(X,PZ),FW) = φX(ln f)g(Z,PW) − cos²θ(X ln f − η(X))g(Z,W)`
    pub pz_fw: f64,
    /// `g(h(X,Z),FPW) = cos²θ(X ln f − η(X))g(Z,W) − φX(ln f)g(Z,PW)`
    pub fpw: f64,
    /// `g(h(X,PZ),FPW) = −cos²θ φX(ln f)g(Z,W) − cos²θ(X ln f − η(X))g(Z,PW)`
    pub pz_fpw: f64,
    /// `g(h(X,Y),FZ) = 0`
    pub first_factor_fz: f64,
    /// `g(h(X,PZ),FW) = −g(h(X,Z),FPW)`
    pub antisymmetry: f64,
}

pub fn mixed_identities(ops: &Ops, wp: &WarpPoint, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> MixedIdentities {
    let geo = ops.geo;
    let c2 = ops.theta.cos().powi(2);
    let (nx, ny, nz, nw) = (ops.norm(x), ops.norm(y), ops.norm(z), ops.norm(w));
    let scale = nx * nz * nw;
    let pz = p_param(geo, z);
    let pw = p_param(geo, w);
    let fw = pf_split(geo, w).1;
    let fpw = pf_split(geo, &pw).1;
    let fz = pf_split(geo, z).1;
    let xl = wp.along(x);
    let phixl = wp.along(&p_param(geo, x));
    let eta = ops.eta(x);
    let gzw = ops.gp(z, w);
    let gzpw = ops.gp(z, &pw);
    let h_xz = geo.h(x, z);
    let h_xpz = geo.h(x, &pz);
    let l18 = geo.inner(&h_xz, &fw);
    let l19 = geo.inner(&h_xpz, &fw);
    let l20 = geo.inner(&h_xz, &fpw);
    let l21 = geo.inner(&h_xpz, &fpw);
    MixedIdentities {
        fw: (l18 - ((eta - xl) * gzpw - phixl * gzw)).abs() / scale,
        pz_fw: (l19 - (phixl * gzpw - c2 * (xl - eta) * gzw)).abs() / scale,
        fpw: (l20 - (c2 * (xl - eta) * gzw - phixl * gzpw)).abs() / scale,
        pz_fpw: (l21 - (-c2 * phixl * gzw - c2 * (xl - eta) * gzpw)).abs() / scale,
        first_factor_fz: geo.inner(&geo.h(x, y), &fz).abs() / (nx * ny * nz),
        antisymmetry: (l19 + l20).abs() / scale,
    }
}

/// `‖A_{FZ}φX − A_{FPZ}X − sin²θ(X(μ) − η(X))Z‖ / (‖X‖‖Z‖)` with `μ = ln f`.
pub fn characterization_residual(ops: &Ops, wp: &WarpPoint, x: &Vector, z: &Vector) -> f64 {
    let lhs = ops.combo(z, x);
    let rhs = ops.geo.push(z) * (ops.sin2() * (wp.along(x) - ops.eta(x)));
    ops.geo.norm(&(lhs - rhs)) / (ops.norm(x) * ops.norm(z))
}

/// Least-squares recovery of `X(μ)` from the characterization identity.
#[derive(Debug, Clone, PartialEq)]
pub struct MuFit {
    /// Fitted `X(μ)` for each vector of the first-factor basis.
    pub derivatives: Vec<f64>,
    /// Max `‖A_{FZ}φX − A_{FPZ}X − sin²θ(X(μ̂) − η(X))Z‖/(‖X‖‖Z‖)`.
    pub fit_residual: f64,
    /// Max `|X(μ̂) − X(ln f)|/‖X‖`.
    pub log_warp_mismatch: f64,
}

pub fn fit_mu(ops: &Ops, wp: &WarpPoint, first: &[Vector], second: &[Vector]) -> MuFit {
    let s2 = ops.sin2();
    let mut derivatives = Vec::with_capacity(first.len());
    let (mut fit_residual, mut mismatch): (f64, f64) = (0.0, 0.0);
    for x in first {
        let eta = ops.eta(x);
        let combos: Vec<Vector> = second.iter().map(|z| ops.combo(z, x)).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for (v, z) in combos.iter().zip(second) {
            let zz = ops.geo.push(z);
            num += ops.geo.inner(v, &zz);
            den += s2 * ops.geo.inner(&zz, &zz);
        }
        let d = eta + num / den;
        for (v, z) in combos.iter().zip(second) {
            let r = ops.geo.norm(&(v - ops.geo.push(z) * (s2 * (d - eta)))) / (ops.norm(x) * ops.norm(z));
            fit_residual = fit_residual.max(r);
        }
        mismatch = mismatch.max((d - wp.along(x)).abs() / ops.norm(x));
        derivatives.push(d);
    }
    MuFit {
        derivatives,
        fit_residual,
        log_warp_mismatch: mismatch,
    }
}

/// Adapted orthonormal frames `{eᵢ, φeᵢ, ξ}`, `{e*_j, sec θ P e*_j}`,
/// `{csc θ F e*_j, csc θ sec θ F P e*_j}` and the `ν` completion, all as
/// ambient vectors.
#[derive(Debug, Clone)]
pub struct AdaptedFrames {
    pub t: usize,
    pub s: usize,
    /// `2t + 1` vectors spanning `D ⊕ ⟨ξ⟩`, ending with ξ.
    pub d: Vec<Vector>,
    /// `2s` vectors spanning `D^θ`.
    pub theta: Vec<Vector>,
    /// `2s` vectors spanning `F D^θ`.
    pub f_theta: Vec<Vector>,
    pub nu: Vec<Vector>,
    /// Max deviation of the joint Gram matrix of all four frames from the
    /// identity.
    pub orthonormality: f64,
    /// Max normalized component of `φ ν` along `F D^θ` or `TM`; zero for a
    /// φ-invariant `ν`.
    pub nu_invariance: f64,
}

impl AdaptedFrames {
    pub fn tangent(&self) -> Vec<Vector> {
        self.d.iter().chain(&self.theta).cloned().collect()
    }

    pub fn normal(&self) -> Vec<Vector> {
        self.f_theta.iter().chain(&self.nu).cloned().collect()
    }
}

/// Picks an orthonormal basis of a φ-invariant span as `e₁, …, e_k` from the
/// candidates followed by `φe₁, …, φe_k`, orthogonalizing each new candidate
/// against everything chosen so far.
fn phi_pairs(
    geo: &PointGeometry,
    candidates: &[Vector],
    image: impl Fn(&Vector) -> Vector,
) -> (Vec<Vector>, Vec<Vector>) {
    let g = geo.metric();
    let mut firsts: Vec<Vector> = Vec::new();
    let mut seconds: Vec<Vector> = Vec::new();
    for c in candidates {
        let mut chosen: Vec<Vector> = firsts.iter().chain(&seconds).cloned().collect();
        let extra = linalg::complete(g, &chosen, std::slice::from_ref(c), chosen.len() + 1);
        if let Some(e) = extra.into_iter().next() {
            let img = image(&e);
            chosen.push(e.clone());
            firsts.push(e);
            seconds.push(img);
        }
    }
    (firsts, seconds)
}

pub fn build_adapted_frames(geo: &PointGeometry, split: &SplitSpec, theta: f64) -> Result<AdaptedFrames> {
    if theta.abs() <= ANGLE_TOL || (theta - FRAC_PI_2).abs() <= ANGLE_TOL {
        return Err(Error::Precondition(format!(
            "adapted frames need a proper slant angle; got {theta} rad"
        )));
    }
    let n = geo.n();
    let (sec, csc) = (1.0 / theta.cos(), 1.0 / theta.sin());
    let phi = |v: &Vector| geo.structure.phi_of(v);

    let d_amb: Vec<Vector> = split.d_basis(n).iter().map(|x| geo.push(x)).collect();
    let (e, phi_e) = phi_pairs(geo, &d_amb, |v| phi(v));
    let t = e.len();
    let mut d: Vec<Vector> = e.into_iter().chain(phi_e).collect();
    d.push(&geo.structure.xi / geo.norm(&geo.structure.xi));

    let th_amb: Vec<Vector> = split.theta_basis(n).iter().map(|x| geo.push(x)).collect();
    let (estar, pestar) = phi_pairs(geo, &th_amb, |v| geo.tangential(&phi(v)) * sec);
    let s = estar.len();
    let f = |v: &Vector| geo.normal_part(&phi(v));
    let f_theta: Vec<Vector> = estar
        .iter()
        .map(|v| f(v) * csc)
        .chain(pestar.iter().map(|pv| f(&(pv / sec)) * (csc * sec)))
        .collect();
    let theta_frame: Vec<Vector> = estar.into_iter().chain(pestar).collect();

    let mut problems = Vec::new();
    if d.len() + theta_frame.len() != n {
        problems.push(format!(
            "tangent bookkeeping: 2t+1+2s = {} but n = {n}",
            d.len() + theta_frame.len()
        ));
    }
    if theta_frame.len() != split.theta.len() {
        problems.push(format!(
            "slant frame has {} vectors for a {}-dimensional slant distribution",
            theta_frame.len(),
            split.theta.len()
        ));
    }
    if !problems.is_empty() {
        return Err(Error::Precondition(problems.join("; ")));
    }

    let known: Vec<Vector> = d.iter().chain(&theta_frame).chain(&f_theta).cloned().collect();
    let chart: Vec<Vector> = (0..geo.dim())
        .map(|i| Vector::from_fn(geo.dim(), |k, _| (k == i) as u8 as f64))
        .collect();
    let nu = linalg::complete(geo.metric(), &known, &chart, geo.dim());
    let all: Vec<Vector> = known.iter().chain(&nu).cloned().collect();
    let k = all.len();
    let orthonormality = linalg::max_abs(&(linalg::gram(geo.metric(), &all) - Matrix::identity(k, k)));
    let mut nu_invariance: f64 = 0.0;
    for v in &nu {
        let pv = phi(v);
        for w in d.iter().chain(&theta_frame).chain(&f_theta) {
            nu_invariance = nu_invariance.max(geo.inner(&pv, w).abs());
        }
    }
    Ok(AdaptedFrames {
        t,
        s,
        d,
        theta: theta_frame,
        f_theta,
        nu,
        orthonormality,
        nu_invariance,
    })
}

/// Sums of `g(h(eᵢ, eⱼ), ẽ_r)²` by block.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PartialSums {
    /// `D⊕⟨ξ⟩ × D⊕⟨ξ⟩` against `F D^θ`.
    pub first_first: f64,
    /// Both orders of `D⊕⟨ξ⟩ × D^θ` against `F D^θ`.
    pub mixed: f64,
    /// `D^θ × D^θ` against `F D^θ`.
    pub slant_slant: f64,
    /// Everything against `ν`.
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HNormBound {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub partial: PartialSums,
    /// `‖h‖²` recomputed in the immersion's own orthonormal frames.
    pub lhs_other_frame: f64,
}

fn sq_component(geo: &PointGeometry, a: &Vector, b: &Vector, nr: &Vector) -> f64 {
    geo.inner(&geo.h_ambient(a, b), nr).powi(2)
}

/// `‖h‖² ≥ 4s(csc²θ + cot²θ)(‖∇ᵀ ln f‖² − 1)` at one point.
pub fn h_norm_bound(geo: &PointGeometry, frames: &AdaptedFrames, theta: f64, grad_sq: f64) -> HNormBound {
    let mut p = PartialSums::default();
    for r in &frames.f_theta {
        for a in &frames.d {
            for b in &frames.d {
                p.first_first += sq_component(geo, a, b, r);
            }
            for b in &frames.theta {
                p.mixed += 2.0 * sq_component(geo, a, b, r);
            }
        }
        for a in &frames.theta {
            for b in &frames.theta {
                p.slant_slant += sq_component(geo, a, b, r);
            }
        }
    }
    let tangent = frames.tangent();
    for r in &frames.nu {
        for a in &tangent {
            for b in &tangent {
                p.nu += sq_component(geo, a, b, r);
            }
        }
    }
    let lhs = p.first_first + p.mixed + p.slant_slant + p.nu;
    let (csc2, cot2) = (1.0 / theta.sin().powi(2), 1.0 / theta.tan().powi(2));
    let rhs = 4.0 * frames.s as f64 * (csc2 + cot2) * (grad_sq - 1.0);
    let lhs_other_frame = geo.h_norm_squared(&geo.tangent_on_params(), &geo.normal_on);
    HNormBound {
        lhs,
        rhs,
        margin: lhs - rhs,
        partial: p,
        lhs_other_frame,
    }
}

/// Quantities behind the equality case of the `‖h‖²` bound at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EqualityDiagnostics {
    /// Max `‖h(X, Y)‖` over the `D ⊕ ⟨ξ⟩` frame.
    pub h_first: f64,
    /// Max `‖h(Z, W)‖` over the `D^θ` frame.
    pub h_slant: f64,
    /// Max `ν`-component norm of `h(X, Z)`.
    pub h_mixed_nu: f64,
    /// `‖H‖` of the mean curvature vector.
    pub mean_curvature: f64,
}

impl EqualityDiagnostics {
    pub fn equality_case(&self, tol: f64) -> bool {
        self.h_first < tol && self.h_slant < tol && self.h_mixed_nu < tol
    }
}

pub fn equality_diagnostics(geo: &PointGeometry, frames: &AdaptedFrames) -> EqualityDiagnostics {
    let mut out = EqualityDiagnostics::default();
    for a in &frames.d {
        for b in &frames.d {
            out.h_first = out.h_first.max(geo.norm(&geo.h_ambient(a, b)));
        }
        for b in &frames.theta {
            let hv = geo.h_ambient(a, b);
            let nu_part: f64 = frames.nu.iter().map(|r| geo.inner(&hv, r).powi(2)).sum();
            out.h_mixed_nu = out.h_mixed_nu.max(nu_part.sqrt());
        }
    }
    for a in &frames.theta {
        for b in &frames.theta {
            out.h_slant = out.h_slant.max(geo.norm(&geo.h_ambient(a, b)));
        }
    }
    out.mean_curvature = geo.norm(&geo.mean_curvature());
    out
}

/// `|g(∇_Z W, X) + X(ln f)g(Z, W)| / (‖X‖‖Z‖‖W‖)`: the second factor is
/// totally umbilical in `M` with mean curvature `−∇ ln f`.
pub fn umbilic_residual(ops: &Ops, wp: &WarpPoint, x: &Vector, z: &Vector, w: &Vector) -> f64 {
    let lhs = ops.gp(&ops.geo.nabla(z, w), x);
    let rhs = -wp.along(x) * ops.gp(z, w);
    (lhs - rhs).abs() / (ops.norm(x) * ops.norm(z) * ops.norm(w))
}

/// `‖A_{φZ}X + φX(ln f)Z‖ / (‖X‖‖Z‖)` for the contact CR case.
pub fn cr_shape_residual(geo: &PointGeometry, wp: &WarpPoint, x: &Vector, z: &Vector) -> Result<f64> {
    let phi_z = geo.structure.phi_of(&geo.push(z));
    let a = geo.shape_operator(&phi_z, x)?;
    let phix_l = wp.along(&p_param(geo, x));
    Ok(geo.norm(&(a + geo.push(z) * phix_l)) / (geo.param_norm(x) * geo.param_norm(z)))
}

/// `‖h‖²` restricted to `F D^⊥` components against `2s(‖∇ᵀ ln f‖² − 1)`,
/// `s = dim D^⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrBound {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Max `‖PZ‖/‖Z‖` over `D^⊥`, zero when `θ = π/2`.
    pub p_residual: f64,
}

pub fn cr_bound(geo: &PointGeometry, split: &SplitSpec, grad_sq: f64) -> Result<CrBound> {
    let n = geo.n();
    let perp = split.theta_basis(n);
    let p_residual = perp
        .iter()
        .map(|z| geo.norm(&pf_split(geo, z).0) / geo.param_norm(z))
        .fold(0.0, f64::max);
    let images: Vec<Vector> = perp.iter().map(|z| pf_split(geo, z).1).collect();
    let f_perp = linalg::orthonormalize(geo.metric(), &images)?;
    let frame = geo.tangent_on_params();
    let lhs = geo.h_norm_squared(&frame, &f_perp);
    let rhs = 2.0 * perp.len() as f64 * (grad_sq - 1.0);
    Ok(CrBound {
        lhs,
        rhs,
        margin: lhs - rhs,
        p_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin_ambient, EXAMPLE1_R9, EXAMPLE2_KENMOTSU};

    fn example2(theta: f64) -> (Immersion, SplitSpec, Warp) {
        let c = format!("u4*cos({theta:?})");
        let s = format!("u4*sin({theta:?})");
        let imm = Immersion::from_strs(
            &["u1", "u2", "u3", "u4", "z"],
            &["u1", "0", "u3", "0", "u2", "0", &c, &s, "z"],
            builtin_ambient(EXAMPLE2_KENMOTSU).unwrap(),
        )
        .unwrap();
        let split = SplitSpec {
            d: vec![0, 1],
            theta: vec![2, 3],
            xi: 4,
        };
        let spec = WarpSpec {
            factor1: vec!["u1".into(), "u2".into(), "z".into()],
            factor2: vec!["u3".into(), "u4".into()],
            warping: parse("exp(z)").unwrap(),
            slant_theta: Some(theta),
        };
        let warp = spec.resolve(&imm).unwrap();
        (imm, split, warp)
    }

    #[test]
    fn warping_may_not_reference_second_factor() {
        let (imm, _, _) = example2(0.5);
        let spec = WarpSpec {
            factor1: vec!["u1".into(), "u2".into(), "z".into()],
            factor2: vec!["u3".into(), "u4".into()],
            warping: parse("exp(z + u3)").unwrap(),
            slant_theta: None,
        };
        let err = spec.resolve(&imm).unwrap_err().to_string();
        assert!(err.contains("second-factor parameter `u3`"), "{err}");
    }

    #[test]
    fn example2_block_structure_and_connection() {
        let (imm, _, warp) = example2(0.9);
        let u = [0.2, -0.4, 0.6, 0.1, 0.3];
        let geo = imm.at(&u).unwrap();
        let wp = warp.at(&u).unwrap();
        assert!(block_cross(&geo, &warp) < 1e-15);
        let others = vec![vec![0.9, 0.1, 0.0, 0.0, -0.45], vec![-0.3, 0.7, 0.0, 0.0, 0.1]];
        assert!(block_quotient_variation(&imm, &warp, &u, &others).unwrap() < 1e-12);
        assert!(warp_connection_residual(&geo, &warp, &wp) < 1e-12);
        assert!((warp_gradient_norm(&geo, &warp, &wp).unwrap() - 1.0).abs() < 1e-12);
        match xi_conditions(&geo, &warp, &wp).unwrap() {
            XiConditions::FirstFactor { log_derivative, h_mixed } => {
                assert!(log_derivative < 1e-14 && h_mixed < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gradient_norm_of_exp_2z_is_four() {
        let (imm, _, mut warp) = example2(0.9);
        warp.warping = parse("exp(2*z)").unwrap();
        let u = [0.2, -0.4, 0.6, 0.1, 0.3];
        let g = warp_gradient_norm(&imm.at(&u).unwrap(), &warp, &warp.at(&u).unwrap()).unwrap();
        assert!((g - 4.0).abs() < 1e-12);
    }

    #[test]
    fn adapted_frames_for_example2() {
        let th = std::f64::consts::FRAC_PI_3;
        let (imm, split, warp) = example2(th);
        let u = [0.2, -0.4, 0.6, 0.1, 0.3];
        let geo = imm.at(&u).unwrap();
        let frames = build_adapted_frames(&geo, &split, th).unwrap();
        assert_eq!((frames.t, frames.s), (1, 1));
        assert_eq!(frames.f_theta.len(), 2);
        assert_eq!(frames.nu.len(), 2);
        assert!(frames.orthonormality < 1e-12, "{}", frames.orthonormality);
        assert!(frames.nu_invariance < 1e-12);
        let wp = warp.at(&u).unwrap();
        let grad = warp_gradient_norm(&geo, &warp, &wp).unwrap();
        let bound = h_norm_bound(&geo, &frames, th, grad);
        assert!(bound.rhs.abs() < 1e-11);
        assert!(bound.lhs.abs() < 1e-20);
        assert!(build_adapted_frames(&geo, &split, FRAC_PI_2).is_err());
    }

    #[test]
    fn characterization_and_identities_hold_on_example2() {
        let th = 0.7;
        let (imm, split, warp) = example2(th);
        let u = [0.5, 0.1, -0.6, 0.2, -0.2];
        let geo = imm.at(&u).unwrap();
        let wp = warp.at(&u).unwrap();
        let ops = Ops::new(&geo, th);
        let first = split.d_xi_basis(5);
        let second = split.theta_basis(5);
        for x in &first {
            for z in &second {
                assert!(characterization_residual(&ops, &wp, x, z) < 1e-12);
                for w in &second {
                    let m = mixed_identities(&ops, &wp, x, &first[0], z, w);
                    assert!(m.fw < 1e-12 && m.pz_fw < 1e-12 && m.fpw < 1e-12 && m.pz_fpw < 1e-12);
                    assert!(umbilic_residual(&ops, &wp, x, z, w) < 1e-12);
                }
            }
        }
        let fit = fit_mu(&ops, &wp, &first, &second);
        assert!(fit.log_warp_mismatch < 1e-12);
    }

    #[test]
    fn trivial_product_has_negative_bound() {
        // Flat ambient, ξ tangent, f ≡ 1: ‖∇ᵀ ln f‖² = 0 so the bound is negative.
        let imm = Immersion::from_strs(
            &["a", "b", "c", "d", "z"],
            &["a", "0", "c", "0", "b", "0", "d*0.5", "d*0.8660254037844386", "z"],
            builtin_ambient(EXAMPLE1_R9).unwrap(),
        )
        .unwrap();
        let split = SplitSpec {
            d: vec![0, 1],
            theta: vec![2, 3],
            xi: 4,
        };
        let spec = WarpSpec {
            factor1: vec!["a".into(), "b".into(), "z".into()],
            factor2: vec!["c".into(), "d".into()],
            warping: parse("1").unwrap(),
            slant_theta: None,
        };
        let warp = spec.resolve(&imm).unwrap();
        let u = [0.1, 0.2, 0.3, 0.4, 0.5];
        let geo = imm.at(&u).unwrap();
        let th = (0.5f64).acos();
        let frames = build_adapted_frames(&geo, &split, th).unwrap();
        let wp = warp.at(&u).unwrap();
        let g = warp_gradient_norm(&geo, &warp, &wp).unwrap();
        assert_eq!(g, 0.0);
        let b = h_norm_bound(&geo, &frames, th, g);
        assert!(b.lhs == 0.0 && b.rhs < 0.0 && b.margin > 0.0);
    }
}
