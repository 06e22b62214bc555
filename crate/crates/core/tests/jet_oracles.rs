use approx::assert_relative_eq;
use proptest::prelude::*;
use wavekahler::expr::FieldExpr;
use wavekahler::jets::{Jet, JetSpace};

fn expr(src: &str) -> FieldExpr {
    FieldExpr::parse_in(src, &["x", "y"]).unwrap()
}

fn eval(e: &FieldExpr, x: f64, y: f64) -> f64 {
    e.eval(&|n: &str| match n {
        "x" => Some(x),
        "y" => Some(y),
        _ => None,
    })
    .unwrap()
}

/// Five-point central differences for the first and second partials.
fn fd_partials(e: &FieldExpr, x: f64, y: f64) -> [f64; 5] {
    let h = 1e-3;
    let f = |a: f64, b: f64| eval(e, a, b);
    let d = |g: &dyn Fn(f64) -> f64| (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h);
    let fx = d(&|s| f(x + s, y));
    let fy = d(&|s| f(x, y + s));
    let fxx = d(&|s| d(&|r| f(x + s + r, y)));
    let fxy = d(&|s| d(&|r| f(x + r, y + s)));
    let fyy = d(&|s| d(&|r| f(x, y + s + r)));
    [fx, fy, fxx, fxy, fyy]
}

const SAMPLES: &[&str] = &[
    "sin(x)*exp(y) + x^3/(1 + y^2)",
    "log(2 + cos(x*y)) - sqrt(3 + x^2)",
    "exp(x - y)*cos(0.5*y) + x^(-2)",
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn jet_partials_match_finite_differences(i in 0usize..3, x in 0.4f64..1.6, y in -1.0f64..1.0) {
        let e = expr(SAMPLES[i]);
        let j = e.lift(&["x", "y"], &[x, y], 2).unwrap();
        let fd = fd_partials(&e, x, y);
        let jets = [
            j.partial(&[1, 0]).unwrap(),
            j.partial(&[0, 1]).unwrap(),
            j.partial(&[2, 0]).unwrap(),
            j.partial(&[1, 1]).unwrap(),
            j.partial(&[0, 2]).unwrap(),
        ];
        for (a, b) in jets.iter().zip(fd) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "jet {a} vs fd {b}");
        }
    }

    #[test]
    fn exp_and_ln_are_inverse(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let s = Jet::seed(&[x, y], 4).unwrap();
        let f = (&s[0] * &s[1]).sin().add_scalar(2.0);
        prop_assert!(f.ln().exp().max_abs_diff(&f) < 1e-12);
        prop_assert!(f.sqrt().powi(2).max_abs_diff(&f) < 1e-12);
        prop_assert!((&f * &f.recip()).add_scalar(-1.0).max_abs_diff(&Jet::zero(f.space())) < 1e-12);
    }

    #[test]
    fn leibniz_rule(x in -1.0f64..1.0, y in -1.0f64..1.0, var in 0usize..2) {
        let s = Jet::seed(&[x, y], 4).unwrap();
        let f = s[0].exp() + &s[1] * &s[1];
        let g = (&s[0] - &s[1]).cos();
        let lhs = (&f * &g).d(var);
        let rhs = &(&f.d(var) * &g.truncate(3)) + &(&f.truncate(3) * &g.d(var));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn compose_with_exp_series_is_exp(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let s = Jet::seed(&[x, y], 5).unwrap();
        let f = &s[0] * &s[1] + s[0].sin();
        let v = f.value().exp();
        let taylor: Vec<f64> = (0..=5).map(|k| v / wavekahler::jets::factorial(k)).collect();
        prop_assert!(f.compose(&taylor).max_abs_diff(&f.exp()) < 1e-12 * v.max(1.0));
    }
}

#[test]
fn third_derivative_of_a_polynomial_is_exact() {
    let e = expr("x^3*y^2 - 2*x*y^3");
    let j = e.lift(&["x", "y"], &[0.7, -0.4], 5).unwrap();
    assert_relative_eq!(j.partial(&[3, 2]).unwrap(), 12.0, epsilon = 1e-12);
    assert_relative_eq!(j.partial(&[1, 3]).unwrap(), -12.0, epsilon = 1e-12);
    assert_relative_eq!(j.partial(&[2, 1]).unwrap(), 12.0 * 0.7 * -0.4, epsilon = 1e-12);
    assert_eq!(j.partial(&[4, 2]).unwrap_or(0.0), 0.0);
}

#[test]
fn one_dimensional_layout_is_by_degree() {
    let space = JetSpace::new(1, 4).unwrap();
    let x = Jet::variable(&space, 0, 0.5);
    let c = x.exp().coeffs().to_vec();
    for (k, v) in c.iter().enumerate() {
        assert_relative_eq!(*v, 0.5f64.exp() / wavekahler::jets::factorial(k), epsilon = 1e-14);
    }
}
