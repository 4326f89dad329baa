use std::collections::BTreeMap;

use super::ast::{BinOp, Expr, Func};
use super::jet::{Jet2, Scalar};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
}

fn domain(node: &Expr, reason: impl Into<String>) -> EvalError {
    EvalError::Domain {
        subexpr: node.to_string(),
        reason: reason.into(),
    }
}

/// Variable binding: parallel slices of names and values.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a, T> {
    names: &'a [String],
    values: &'a [T],
}

impl<'a, T: Scalar> Env<'a, T> {
    pub fn new(names: &'a [String], values: &'a [T]) -> Self {
        assert_eq!(names.len(), values.len(), "binding names/values length");
        Env { names, values }
    }

    fn get(&self, name: &str) -> Option<&T> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.values[i])
    }

    fn nvars(&self) -> usize {
        self.values.first().map_or(0, Scalar::nvars)
    }
}

impl Expr {
    /// Evaluates over any [`Scalar`] carrier.
    pub fn eval<T: Scalar>(&self, env: &Env<'_, T>) -> Result<T, EvalError> {
        let out = self.eval_node(env)?;
        Ok(out)
    }

    /// Plain numeric evaluation.
    pub fn eval_f64(&self, names: &[String], values: &[f64]) -> Result<f64, EvalError> {
        self.eval(&Env::new(names, values))
    }

    /// Evaluates to a second-order jet with respect to the variables
    /// the binding's jets were seeded over.
    pub fn eval_jet2(&self, binding: &BTreeMap<String, Jet2>) -> Result<Jet2, EvalError> {
        let names: Vec<String> = binding.keys().cloned().collect();
        let values: Vec<Jet2> = binding.values().cloned().collect();
        self.eval(&Env::new(&names, &values))
    }

    fn eval_node<T: Scalar>(&self, env: &Env<'_, T>) -> Result<T, EvalError> {
        let n = env.nvars();
        let out = match self {
            Expr::Num(v) => T::constant(*v, n),
            Expr::Const(c) => T::constant(c.value(), n),
            Expr::Var(name) => env
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::UnknownVariable(name.clone()))?,
            Expr::Neg(inner) => inner.eval_node(env)?.neg(),
            Expr::Call(func, arg) => {
                let a = arg.eval_node(env)?;
                apply_func(self, *func, &a)?
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval_node(env)?;
                match op {
                    BinOp::Add => a.add(&r.eval_node(env)?),
                    BinOp::Sub => a.sub(&r.eval_node(env)?),
                    BinOp::Mul => a.mul(&r.eval_node(env)?),
                    BinOp::Div => {
                        let b = r.eval_node(env)?;
                        let d = b.value();
                        if d == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        a.mul(&b.apply(1.0 / d, -1.0 / (d * d), 2.0 / (d * d * d)))
                    }
                    BinOp::Pow => power(self, &a, r, env)?,
                }
            }
        };
        if !out.is_finite() {
            return Err(domain(self, "non-finite value or derivative"));
        }
        Ok(out)
    }
}

fn apply_func<T: Scalar>(node: &Expr, func: Func, a: &T) -> Result<T, EvalError> {
    let x = a.value();
    let out = match func {
        Func::Sin => a.apply(x.sin(), x.cos(), -x.sin()),
        Func::Cos => a.apply(x.cos(), -x.sin(), -x.cos()),
        Func::Tan => {
            let c = x.cos();
            if c == 0.0 {
                return Err(domain(node, "tan at a pole"));
            }
            let t = x.tan();
            let sec2 = 1.0 / (c * c);
            a.apply(t, sec2, 2.0 * t * sec2)
        }
        Func::Exp => {
            let e = x.exp();
            a.apply(e, e, e)
        }
        Func::Log => {
            if x <= 0.0 {
                return Err(domain(node, format!("log of non-positive value {x}")));
            }
            a.apply(x.ln(), 1.0 / x, -1.0 / (x * x))
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(domain(node, format!("sqrt of negative value {x}")));
            }
            let s = x.sqrt();
            a.apply(s, 0.5 / s, -0.25 / (s * x))
        }
    };
    Ok(out)
}

fn power<T: Scalar>(node: &Expr, base: &T, exponent: &Expr, env: &Env<'_, T>) -> Result<T, EvalError> {
    let x = base.value();
    if exponent.is_constant() {
        let c = exponent.eval_f64(&[], &[])?;
        if c == 0.0 {
            return Ok(base.apply(1.0, 0.0, 0.0));
        }
        let integral = c.fract() == 0.0 && c.abs() < i32::MAX as f64;
        if x < 0.0 && !integral {
            return Err(domain(node, format!("non-integer power of negative value {x}")));
        }
        let pw = |p: f64| -> f64 {
            if integral {
                x.powi(p as i32)
            } else {
                x.powf(p)
            }
        };
        let f1 = c * pw(c - 1.0);
        let f2 = if c == 1.0 { 0.0 } else { c * (c - 1.0) * pw(c - 2.0) };
        return Ok(base.apply(pw(c), f1, f2));
    }
    if x <= 0.0 {
        return Err(domain(node, format!("variable power of non-positive base {x}")));
    }
    let b = exponent.eval_node(env)?;
    let ln = base.apply(x.ln(), 1.0 / x, -1.0 / (x * x));
    let prod = b.mul(&ln);
    let e = prod.value().exp();
    Ok(prod.apply(e, e, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exp_sin_at_half_pi() {
        let e = parse("exp(2*z)*sin(u)").unwrap();
        let v = e
            .eval_f64(&names(&["z", "u"]), &[0.0, std::f64::consts::FRAC_PI_2])
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn exp_jet_at_zero() {
        let mut b = BTreeMap::new();
        b.insert("z".to_string(), Jet2::variable(0.0, 0, 1));
        let j = parse("exp(z)").unwrap().eval_jet2(&b).unwrap();
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.gradient(), &[1.0]);
        assert_eq!(j.hessian(0, 0), 1.0);
    }

    #[test]
    fn bilinear_jet() {
        let mut b = BTreeMap::new();
        b.insert("u".to_string(), Jet2::variable(2.0, 0, 2));
        b.insert("v".to_string(), Jet2::variable(3.0, 1, 2));
        let j = parse("u*v").unwrap().eval_jet2(&b).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.gradient(), &[3.0, 2.0]);
        assert_eq!(j.hessian_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let n = names(&["x"]);
        match parse("1 + log(x - 1)").unwrap().eval_f64(&n, &[0.5]) {
            Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "log(x - 1)"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("sqrt(x)").unwrap().eval_f64(&n, &[-1.0]),
            Err(EvalError::Domain { .. })
        ));
        match parse("2 / (x - x)").unwrap().eval_f64(&n, &[3.0]) {
            Err(EvalError::Domain { subexpr, reason }) => {
                assert_eq!(subexpr, "2 / (x - x)");
                assert_eq!(reason, "division by zero");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sqrt_at_zero_has_no_jet() {
        let v = Jet2::seed(&[0.0]);
        let n = names(&["x"]);
        let e = parse("sqrt(x)").unwrap();
        assert_eq!(e.eval_f64(&n, &[0.0]).unwrap(), 0.0);
        assert!(e.eval(&Env::new(&n, &v)).is_err());
    }

    #[test]
    fn unknown_variable() {
        assert_eq!(
            parse("q + 1").unwrap().eval_f64(&[], &[]),
            Err(EvalError::UnknownVariable("q".into()))
        );
    }

    #[test]
    fn integer_powers_of_negative_bases() {
        let n = names(&["u"]);
        let v = Jet2::seed(&[-2.0]);
        let j = parse("-u^3").unwrap().eval(&Env::new(&n, &v)).unwrap();
        assert_eq!(j.value(), 8.0);
        assert_eq!(j.gradient(), &[-12.0]);
        assert_eq!(j.hessian(0, 0), 12.0);
        assert!(parse("u^0.5").unwrap().eval_f64(&n, &[-2.0]).is_err());
    }

    #[test]
    fn variable_exponent() {
        let n = names(&["a", "b"]);
        let v = Jet2::seed(&[2.0, 3.0]);
        let j = parse("a^b").unwrap().eval(&Env::new(&n, &v)).unwrap();
        assert!((j.value() - 8.0).abs() < 1e-12);
        assert!((j.gradient()[0] - 12.0).abs() < 1e-12);
        assert!((j.gradient()[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
    }
}
