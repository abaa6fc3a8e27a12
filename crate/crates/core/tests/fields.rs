use approx::assert_abs_diff_eq;
use cuspflow_core::fields::{find_generic_singularity, AnalyticPlaneField, Ball, Vec2};
use cuspflow_core::Error;
use proptest::prelude::*;

fn test_field() -> AnalyticPlaneField {
    AnalyticPlaneField::parse("-x1 + x1^3 + x1*x2^2", "-x2/2", Ball::new([0.0, 0.0], 0.6)).unwrap()
}

fn point_in_ball(r: f64) -> impl Strategy<Value = Vec2> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(u, a)| Vec2::new(r * u.sqrt() * a.cos(), r * u.sqrt() * a.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_jets_match_hand_derivatives(
        a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64,
        x in point_in_ball(0.6),
    ) {
        // w1 = a x1³ + b x1 x2² + c x1²x2, w2 = d x2⁴ + x1 x2
        let f = AnalyticPlaneField::parse(
            &format!("({a})*x1^3 + ({b})*x1*x2^2 + ({c})*x1^2*x2"),
            &format!("({d})*x2^4 + x1*x2"),
            Ball::new([0.0, 0.0], 1.0),
        ).unwrap();
        let (x1, x2) = (x.x, x.y);
        let jet = f.jet(&x, 4).unwrap();
        let tol = 1e-12;
        prop_assert!((jet.derivative(0, &[0]) - (3.0 * a * x1 * x1 + b * x2 * x2 + 2.0 * c * x1 * x2)).abs() < tol);
        prop_assert!((jet.derivative(0, &[1]) - (2.0 * b * x1 * x2 + c * x1 * x1)).abs() < tol);
        prop_assert!((jet.derivative(0, &[0, 0, 0]) - 6.0 * a).abs() < tol);
        prop_assert!((jet.derivative(0, &[0, 0, 1]) - 2.0 * c).abs() < tol);
        prop_assert!((jet.derivative(1, &[1]) - (4.0 * d * x2.powi(3) + x1)).abs() < tol);
        prop_assert!((jet.derivative(1, &[1, 1, 1, 1]) - 24.0 * d).abs() < tol);
        prop_assert!((jet.derivative(1, &[1]) - f.jacobian(&x)[(1, 1)]).abs() < tol);
    }

    #[test]
    fn eigenframe_invariants(x in point_in_ball(0.6)) {
        let f = test_field();
        let fr = f.eigenframe(&x).unwrap();
        let dw = f.jacobian(&x);
        prop_assert!(fr.lambda1 < fr.lambda2);
        prop_assert!((dw * fr.r1 - fr.r1 * fr.lambda1).norm() < 1e-12);
        prop_assert!((dw * fr.r2 - fr.r2 * fr.lambda2).norm() < 1e-12);
        prop_assert!((fr.r1.norm() - 1.0).abs() < 1e-12 && (fr.r2.norm() - 1.0).abs() < 1e-12);
        prop_assert!((fr.l1.dot(&fr.r1) - 1.0).abs() < 1e-12 && fr.l1.dot(&fr.r2).abs() < 1e-12);
        prop_assert!((fr.l2.dot(&fr.r2) - 1.0).abs() < 1e-12 && fr.l2.dot(&fr.r1).abs() < 1e-12);
        if let Some(tau) = fr.tau {
            prop_assert!(fr.lambda1 < 0.0);
            prop_assert!((tau + 1.0 / fr.lambda1).abs() <= 1e-14 * tau.abs());
            prop_assert!((f.tau(&x).unwrap() - tau).abs() <= 1e-14 * tau.abs());
        }
    }

    #[test]
    fn singularity_search_is_idempotent(x in point_in_ball(0.3)) {
        let f = test_field();
        let s = find_generic_singularity(&f, &x).unwrap();
        let again = find_generic_singularity(&f, &s.x0).unwrap();
        prop_assert!((again.x0 - s.x0).norm() < 1e-12);
        prop_assert!((again.t0 - s.t0).abs() < 1e-12);
    }
}

#[test]
fn test_field_singularity_and_hessians() {
    let s = find_generic_singularity(&test_field(), &Vec2::new(0.1, -0.05)).unwrap();
    assert_abs_diff_eq!(s.t0, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.x0.norm(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.hessian_lambda1[(0, 0)], 6.0, epsilon = 1e-10);
    assert_abs_diff_eq!(s.hessian_lambda1[(1, 1)], 2.0, epsilon = 1e-10);
    assert_abs_diff_eq!(s.hessian_lambda1[(0, 1)], 0.0, epsilon = 1e-10);
}

#[test]
fn shifted_singularity_is_found() {
    // The test field translated by (0.1, −0.05).
    let f = AnalyticPlaneField::parse(
        "-(x1-0.1) + (x1-0.1)^3 + (x1-0.1)*(x2+0.05)^2",
        "-(x2+0.05)/2",
        Ball::new([0.1, -0.05], 0.5),
    )
    .unwrap();
    let s = find_generic_singularity(&f, &Vec2::new(0.0, 0.0)).unwrap();
    assert_abs_diff_eq!(s.x0.x, 0.1, epsilon = 1e-12);
    assert_abs_diff_eq!(s.x0.y, -0.05, epsilon = 1e-12);
}

#[test]
fn expanding_field_has_no_blow_up() {
    let f = AnalyticPlaneField::parse("x1 + x1^3", "x2", Ball::new([0.0, 0.0], 0.5)).unwrap();
    let e = find_generic_singularity(&f, &Vec2::new(0.1, 0.1)).unwrap_err();
    assert!(matches!(e, Error::Hypothesis(_) | Error::Genericity(_)), "{e}");
    assert_eq!(e.exit_code(), 3);
}
