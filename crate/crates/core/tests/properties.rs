use proptest::prelude::*;

use gls::composition::holder_split;
use gls::quadrature::{lp_norm, DEFAULT_TOL};
use gls::{
    check_compactness, check_pushforward, gls_norm, linear_substitute, odot, pushforward_density, CompactnessOptions, Expr, GlsOptions, Matrix,
    MeasureSpace, PsiFunction, RealFunction, Support,
};

fn unit() -> MeasureSpace {
    MeasureSpace::unit()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("p".to_string()),
        (0u32..50).prop_map(|n| n.to_string()),
        (0.0f64..10.0).prop_map(|v| format!("{v:.4}")),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just("+"), Just("-"), Just("*"), Just("/"), Just("^")])
                .prop_map(|(a, b, op)| format!("({a}){op}({b})")),
            (inner.clone(), prop_oneof![Just("exp"), Just("log"), Just("abs"), Just("sqrt")]).prop_map(|(a, f)| format!("{f}({a})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("pow({a}, {b})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn expr_print_parse_round_trip(src in source(), x in -5.0f64..5.0) {
        let e = Expr::parse(&src).unwrap();
        let back = Expr::parse(&e.to_string()).unwrap();
        prop_assert_eq!(&back, &e);
        match (e.eval(x), back.eval(x)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn expr_parser_total(s in "\\PC{0,60}") {
        if let Ok(e) = Expr::parse(&s) {
            let _ = e.eval(0.3);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lp_norm_homogeneous_and_monotone(a in 0.0f64..0.45, c in -5.0f64..5.0, p in 1.0f64..2.0, dq in 0.0f64..0.2) {
        let f = RealFunction::power(-a);
        let v = lp_norm(&f, p, &unit(), DEFAULT_TOL).unwrap().value.as_f64();
        let scaled = lp_norm(&f.scaled(c), p, &unit(), DEFAULT_TOL).unwrap().value.as_f64();
        prop_assert!((scaled - c.abs() * v).abs() <= 1e-8 * (1.0 + v));
        // probability space: |f|_p is nondecreasing in p
        let w = lp_norm(&f, p + dq, &unit(), DEFAULT_TOL).unwrap().value.as_f64();
        prop_assert!(w >= v * (1.0 - 1e-9));
        let exact = (1.0 / (1.0 - a * p)).powf(1.0 / p);
        prop_assert!(rel(v, exact) < 1e-7);
    }

    #[test]
    fn gls_homogeneity_and_duality(a in 0.05f64..0.45, c in 0.1f64..10.0, lambda in 0.1f64..10.0) {
        let f = RealFunction::power(-a);
        let b = 1.0 / a;
        let psi = PsiFunction::closed_form(&format!("({b}/({b}-p))^(1/p) * (1 + 1/p)"), Support::bounded(1.0, b).unwrap()).unwrap();
        let n = gls_norm(&f, &psi, &unit(), &GlsOptions::default()).unwrap().value.as_f64();
        let nc = gls_norm(&f.scaled(-c), &psi, &unit(), &GlsOptions::default()).unwrap().value.as_f64();
        prop_assert!(rel(nc, c * n) < 1e-6);
        let nl = gls_norm(&f, &psi.homothety(lambda).unwrap(), &unit(), &GlsOptions::default()).unwrap().value.as_f64();
        prop_assert!(rel(nl, n / lambda) < 1e-6);
    }

    #[test]
    fn odot_is_below_every_alpha(p in 1.0f64..1.9, alphas in proptest::collection::vec(1.0001f64..50.0, 16)) {
        let psi = PsiFunction::closed_form("(2/(2-p))^(1/p)", Support::bounded(1.0, 2.0).unwrap()).unwrap();
        let theta = PsiFunction::closed_form("1 + 1/p", Support::unbounded(1.0).unwrap()).unwrap();
        let v = odot(&psi, &theta, 1.5, p);
        prop_assert!(v.is_feasible());
        for alpha in alphas {
            let beta = alpha / (alpha - 1.0);
            let candidate = psi.eval(alpha * p) * (1.5 * theta.eval(beta)).powf(1.0 / p);
            prop_assert!(v.value <= candidate * (1.0 + 1e-12), "{} > {} at α = {}", v.value, candidate, alpha);
        }
    }

    #[test]
    fn holder_split_holds(a in 0.01f64..0.3, m in 0.5f64..3.0, p in 1.0f64..1.5, alpha in 1.2f64..6.0) {
        let f = RealFunction::power(-a);
        let h = pushforward_density(&RealFunction::power(m), &unit()).unwrap().density().unwrap().clone();
        if let Ok(r) = holder_split(&f, &h, &unit(), p, alpha) {
            prop_assert!(r.lhs <= r.rhs * (1.0 + 1e-9), "{} > {}", r.lhs, r.rhs);
        }
    }

    #[test]
    fn linear_scaling_identity(a in 0.2f64..5.0, p in 1.0f64..4.0, negative in any::<bool>()) {
        let f = RealFunction::parse("exp(-abs(x))").unwrap();
        let a = if negative { -a } else { a };
        let lhs = linear_substitute(&f, &Matrix::scalar(a), &MeasureSpace::real_line(), p).unwrap().as_f64();
        let base = lp_norm(&f, p, &MeasureSpace::real_line(), DEFAULT_TOL).unwrap().value.as_f64();
        prop_assert!((lhs * a.abs().powf(1.0 / p) / base - 1.0).abs() < 1e-6);
    }

    #[test]
    fn compactness_scaling(lambda in 0.05f64..20.0) {
        let s = Support::bounded(1.0, 2.0).unwrap();
        let nu = PsiFunction::closed_form("(2/(2-p))^(1/p)", s).unwrap();
        let gamma = PsiFunction::closed_form("(2/(2-p))^(1/p) / (2 - p)", s).unwrap();
        let base = check_compactness(&nu, &gamma, &CompactnessOptions::default()).unwrap();
        let r = check_compactness(&nu, &gamma.homothety(lambda).unwrap(), &CompactnessOptions::default()).unwrap();
        prop_assert_eq!(r.verdict, base.verdict);
        prop_assert!(rel(r.sup_ratio, base.sup_ratio / lambda) < 1e-12);
    }
}

#[test]
fn pushforward_on_random_intervals() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for src in ["x^3", "x^0.6", "0.5*x + 0.25", "x^2*(3 - 2*x)", "sqrt(x)*(2 - sqrt(x))"] {
        let c = pushforward_density(&RealFunction::parse(src).unwrap(), &unit()).unwrap();
        let intervals: Vec<(f64, f64)> = (0..20)
            .map(|_| {
                let (u, v): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                (u.min(v), u.max(v) + 1e-3)
            })
            .map(|(u, v)| (u, v.min(1.0)))
            .collect();
        let err = check_pushforward(&c, &intervals, 1e-10).unwrap();
        assert!(err < 1e-6, "{src}: {err}");
    }
}
