use lieze_core::expr::{lift_dependent, EvalMode, EvaluationPoint, Exponent, Expr, JetSpace, Poly, Symbol};
use lieze_core::linalg::{self, Matrix};
use lieze_core::parser::parse_expression;
use lieze_core::properties;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = BigRational> {
    (-6i64..=6, 1i64..=5).prop_map(|(n, d)| BigRational::new(n.into(), d.into()))
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        rational().prop_map(Expr::Rational),
        prop::sample::select(vec!["x", "y", "t", "b"]).prop_map(Expr::sym),
        prop::collection::vec(prop::sample::select(vec!["x", "y", "t"]), 1..=2).prop_map(|idx| Expr::jet("u", &idx)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Sum),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Product),
            (
                inner.clone(),
                prop::sample::select(vec![(2, 1), (-1, 1), (1, 2), (-3, 2)])
            )
                .prop_map(|(e, (n, d))| e.pow(Exponent::new(n, d))),
            inner.prop_map(Expr::exp),
        ]
    })
}

fn var() -> impl Strategy<Value = Symbol> {
    prop::sample::select(vec!["x", "y", "t"]).prop_map(Symbol::new)
}

fn space() -> JetSpace {
    JetSpace::new("u".into(), vec!["x".into(), "y".into(), "t".into()], 6)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn normalize_is_idempotent(e in expr()) {
        let once = e.normalize();
        prop_assert_eq!(once.normalize(), once);
    }

    #[test]
    fn normal_form_evaluates_like_the_tree(e in expr(), values in prop::collection::vec(0.5f64..1.5, 16)) {
        let p = e.to_poly();
        let mut at = EvaluationPoint::new();
        for (v, x) in lift_dependent(&p, &"u".into()).vars().into_iter().zip(values.iter().cycle()) {
            at.set_f64(v, *x);
        }
        if let (Ok(a), Ok(b), Ok(s)) = (e.eval(&at, EvalMode::Float), p.eval_f64(&at), p.term_scale(&at)) {
            let a = a.to_f64();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(s).max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn product_rule(f in expr(), g in expr(), s in var()) {
        let (f, g) = (f.to_poly(), g.to_poly());
        prop_assert_eq!(f.mul(&g).diff_sym(&s), &f.diff_sym(&s).mul(&g) + &f.mul(&g.diff_sym(&s)));
    }

    #[test]
    fn total_derivatives_commute(e in expr(), a in var(), b in var()) {
        let sp = space();
        let f = sp.lift(&e.to_poly());
        let ab = sp.total_derivative_multi(&f, &[a.clone(), b.clone()]).unwrap();
        let ba = sp.total_derivative_multi(&f, &[b, a]).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn printed_form_parses_back(e in expr()) {
        let p = e.to_poly();
        let text = p.to_string();
        prop_assert_eq!(parse_expression(&text).unwrap().to_poly(), p);
    }

    #[test]
    fn nullspace_is_the_kernel(rows in prop::collection::vec(prop::collection::vec(rational(), 5), 1..6)) {
        let m = Matrix::from_rows(5, rows);
        let ns = linalg::nullspace(&m);
        let (naive, pivots) = properties::naive_rref(m.rows().to_vec(), 5);
        prop_assert_eq!(ns.len() + pivots.len(), 5);
        for v in &ns {
            prop_assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
        let ours = linalg::rref(&m);
        prop_assert_eq!(ours.matrix.rows(), naive.as_slice());
    }
}

#[test]
fn seeded_suites_pass_with_five_hundred_cases() {
    for s in properties::all(42, 500) {
        assert_eq!(s.cases, 500);
        assert!(s.passed(), "{}: {:?}", s.name, s.first_failure);
    }
}

#[test]
fn rational_powers_collapse_for_perfect_squares() {
    let p = parse_expression("(4*x^2)^(1/2)").unwrap().to_poly();
    assert_eq!(
        p,
        Poly::sym("x")
            .scale(&BigRational::from_integer(2.into()))
            .pow(Exponent::from_integer(1))
    );
}
