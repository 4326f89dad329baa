use proptest::prelude::*;
use slantwarp::distribution::{classify, SplitSpec};
use slantwarp::expr::{BinOp, Env, Func};
use slantwarp::immersion::Immersion;
use slantwarp::linalg::Vector;
use slantwarp::manifold::{builtin_ambient, EXAMPLE1_R9, EXAMPLE2_KENMOTSU};
use slantwarp::{parse, Expr, Jet2};

fn names() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

/// Smooth expressions in `x`, `y` that stay finite on `[-1, 1]²`.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-2.0f64..2.0).prop_map(|v| Expr::num((v * 100.0).round() / 100.0)),
        Just(Expr::var("x")),
        Just(Expr::var("y")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinOp::Mul, a, b)),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            // exp of a bounded argument keeps values moderate.
            inner.clone().prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
            inner.prop_map(|a| Expr::binary(BinOp::Div, a, Expr::binary(BinOp::Add, Expr::num(2.0), Expr::call(Func::Cos, Expr::var("x"))))),
        ]
    })
}

fn jet(e: &Expr, p: &[f64]) -> Jet2 {
    let n = names();
    let seeds = Jet2::seed(p);
    e.eval(&Env::new(&n, &seeds)).unwrap()
}

fn value(e: &Expr, p: &[f64]) -> f64 {
    e.eval_f64(&names(), p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jets_agree_with_central_differences(e in smooth_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let p = [x, y];
        let j = jet(&e, &p);
        prop_assert_eq!(j.value().to_bits(), value(&e, &p).to_bits());
        let h = 1e-5;
        for i in 0..2 {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let fd = (value(&e, &a) - value(&e, &b)) / (2.0 * h);
            let scale = j.gradient()[i].abs().max(j.value().abs()).max(1.0);
            prop_assert!((j.gradient()[i] - fd).abs() <= 1e-6 * scale, "d/d{i}: jet {} fd {fd}", j.gradient()[i]);
            let (ja, jb) = (jet(&e, &a), jet(&e, &b));
            for k in 0..2 {
                let fd2 = (ja.gradient()[k] - jb.gradient()[k]) / (2.0 * h);
                let scale = j.hessian(i, k).abs().max(1.0);
                prop_assert!((j.hessian(i, k) - fd2).abs() <= 1e-5 * scale);
            }
        }
        prop_assert_eq!(j.hessian(0, 1).to_bits(), j.hessian(1, 0).to_bits());
    }

    #[test]
    fn reparsing_display_evaluates_identically(e in smooth_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        let p = [x, y];
        prop_assert_eq!(value(&back, &p).to_bits(), value(&e, &p).to_bits(), "{}", text);
    }

    #[test]
    fn product_rule(a in smooth_expr(), b in smooth_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let p = [x, y];
        let (ja, jb) = (jet(&a, &p), jet(&b, &p));
        let jab = jet(&Expr::binary(BinOp::Mul, a, b), &p);
        let scale = |v: f64| v.abs().max(1.0);
        for i in 0..2 {
            let expected = ja.gradient()[i] * jb.value() + ja.value() * jb.gradient()[i];
            prop_assert!((jab.gradient()[i] - expected).abs() <= 1e-12 * scale(expected));
            for k in 0..2 {
                let expected = ja.hessian(i, k) * jb.value()
                    + ja.gradient()[i] * jb.gradient()[k]
                    + ja.gradient()[k] * jb.gradient()[i]
                    + ja.value() * jb.hessian(i, k);
                prop_assert!((jab.hessian(i, k) - expected).abs() <= 1e-12 * scale(expected));
            }
        }
    }
}

fn curved() -> Immersion {
    Immersion::from_strs(
        &["a", "b", "z"],
        &["a", "(a^2 - b^2)/2", "sin(a*b)", "0", "b", "a*b", "0", "cos(b)", "z"],
        builtin_ambient(EXAMPLE2_KENMOTSU).unwrap(),
    )
    .unwrap()
}

fn unit_normal(geo: &slantwarp::immersion::PointGeometry, coeffs: &[f64]) -> Vector {
    let mut v = Vector::zeros(geo.dim());
    for (c, e) in coeffs.iter().zip(&geo.normal_on) {
        v.axpy(*c, e, 1.0);
    }
    &v / geo.norm(&v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn second_fundamental_form_is_symmetric_and_dual_to_shape_operator(
        u in prop::array::uniform3(-0.8f64..0.8),
        x in prop::array::uniform3(-1.0f64..1.0),
        y in prop::array::uniform3(-1.0f64..1.0),
        nc in prop::array::uniform6(0.1f64..1.0),
    ) {
        let geo = curved().at(&u).unwrap();
        let (x, y) = (Vector::from_column_slice(&x), Vector::from_column_slice(&y));
        let hxy = geo.h(&x, &y);
        let scale = geo.norm(&hxy).max(1.0);
        prop_assert!(geo.norm(&(&hxy - geo.h(&y, &x))) <= 1e-12 * scale);
        let n = unit_normal(&geo, &nc);
        let lhs = geo.inner(&geo.shape_operator(&n, &x).unwrap(), &geo.push(&y));
        let rhs = geo.inner(&hxy, &n);
        let s = geo.param_norm(&x) * geo.param_norm(&y);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * s.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn classification_ignores_frame_scaling(c in prop::array::uniform5(0.2f64..5.0)) {
        let params = ["u", "v", "v3", "v4", "z"];
        let target = ["cos(u + v)", "u - v", "u/2 + v", "v3 + v4", "sin(u + v)", "v - u", "u + v/2", "v4 - v3", "z"];
        let amb = builtin_ambient(EXAMPLE1_R9).unwrap();
        let base = Immersion::from_strs(&params, &target, amb.clone()).unwrap();
        // ψ̃(ũ) = ψ(c ũ): every coordinate frame vector is scaled by c_i.
        let scaled_target: Vec<Expr> = base
            .target()
            .iter()
            .map(|e| {
                params.iter().zip(c).fold(e.clone(), |acc, (p, ci)| {
                    acc.substitute(p, &Expr::binary(BinOp::Mul, Expr::num(ci), Expr::var(*p)))
                })
            })
            .collect();
        let scaled = Immersion::new(base.params().to_vec(), scaled_target, amb).unwrap();
        let split = SplitSpec { d: vec![2, 3], theta: vec![0, 1], xi: 4 };
        let pts: Vec<[f64; 5]> = vec![[0.1, 0.2, 0.3, -0.4, 0.5], [-0.7, 0.3, 0.0, 0.9, -0.2]];
        let geos: Vec<_> = pts.iter().map(|p| base.at(p).unwrap()).collect();
        let sgeos: Vec<_> = pts
            .iter()
            .map(|p| {
                let q: Vec<f64> = p.iter().zip(c).map(|(a, ci)| a / ci).collect();
                scaled.at(&q).unwrap()
            })
            .collect();
        let a = classify(&geos, &split, 1).unwrap();
        let b = classify(&sgeos, &split, 1).unwrap();
        prop_assert_eq!(a.kind, b.kind);
        prop_assert!((a.slant_angle.unwrap() - b.slant_angle.unwrap()).abs() < 1e-12);
    }
}
