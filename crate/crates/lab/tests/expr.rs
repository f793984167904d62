use orlicz_lab::expr::Expr;
use proptest::prelude::*;

fn eval(src: &str, x: &[f64], t: f64) -> f64 {
    Expr::parse(src).unwrap().eval(x, t)
}

#[test]
fn precedence_and_associativity() {
    assert_eq!(eval("1 + 2 * 3", &[], 0.0), 7.0);
    assert_eq!(eval("(1 + 2) * 3", &[], 0.0), 9.0);
    assert_eq!(eval("2 ^ 3 ^ 2", &[], 0.0), 512.0);
    assert_eq!(eval("-2 ^ 2", &[], 0.0), -4.0);
    assert_eq!(eval("8 / 4 / 2", &[], 0.0), 1.0);
    assert_eq!(eval("10 - 4 - 3", &[], 0.0), 3.0);
    assert_eq!(eval("2 ^ -1", &[], 0.0), 0.5);
    assert_eq!(eval("1.5e2 + 2E-1", &[], 0.0), 150.2);
}

#[test]
fn variables_constants_functions() {
    let x = [0.25, -0.5, 2.0];
    assert_eq!(eval("x + y + z", &x, 0.0), 1.75);
    assert_eq!(eval("x1 * x2 * x3", &x, 0.0), -0.25);
    assert_eq!(eval("t", &x, 3.5), 3.5);
    assert!((eval("sin(pi * x)", &x, 0.0) - (std::f64::consts::PI / 4.0).sin()).abs() < 1e-15);
    assert!(
        (eval("exp(-pi^2*t)", &x, 0.1) - (-std::f64::consts::PI.powi(2) * 0.1).exp()).abs() < 1e-15
    );
    assert_eq!(eval("abs(y)", &x, 0.0), 0.5);
    assert_eq!(eval("sqrt(abs(y) * 8)", &x, 0.0), 2.0);
    assert_eq!(eval("min(x, y, z)", &x, 0.0), -0.5);
    assert_eq!(eval("max(x, y, z)", &x, 0.0), 2.0);
    assert_eq!(eval("log(e)", &x, 0.0), 1.0);
    assert_eq!(eval("cos(0)", &x, 0.0), 1.0);
}

#[test]
fn dimension_needed() {
    assert_eq!(Expr::parse("t + 1").unwrap().dim_needed(), 0);
    assert_eq!(Expr::parse("sin(x)").unwrap().dim_needed(), 1);
    assert_eq!(Expr::parse("max(x, x3)").unwrap().dim_needed(), 3);
}

#[test]
fn errors_carry_columns() {
    let e = Expr::parse("x * (1 - x").unwrap_err();
    assert_eq!(e.column, 11);
    assert!(e.message.contains("')'"));
    let e = Expr::parse("2 * foo").unwrap_err();
    assert_eq!(e.column, 5);
    assert!(e.message.contains("foo"));
    let e = Expr::parse("sin(1, 2)").unwrap_err();
    assert_eq!(e.column, 1);
    let e = Expr::parse("1 + # 2").unwrap_err();
    assert_eq!(e.column, 5);
    assert!(Expr::parse("").is_err());
    assert!(Expr::parse("sin x").is_err());
    assert!(Expr::parse("2 3").is_err());
}

proptest! {
    #[test]
    fn polynomial_matches_direct(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0, x in -3.0f64..3.0, t in 0.0f64..2.0) {
        let src = format!("{a:?} * x^2 + {b:?} * x * t - {c:?} / (1 + t)");
        let want = a * x * x + b * x * t - c / (1.0 + t);
        let got = eval(&src, &[x], t);
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn literals_round_trip(v in proptest::num::f64::POSITIVE | proptest::num::f64::ZERO) {
        prop_assert_eq!(eval(&format!("{v:?}"), &[], 0.0), v);
    }
}
