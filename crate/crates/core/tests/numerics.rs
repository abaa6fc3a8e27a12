use cuspflow_core::cheb::{lobatto_nodes, Cheb2};
use cuspflow_core::curve::{grid_derivative, pchip};
use cuspflow_core::extrap::limit_in_sqrt;
use cuspflow_core::fields::Vec2;
use cuspflow_core::validation::{criterion, fit_slope, Check};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_derivative_is_exact_on_quartics(c in prop::array::uniform5(-2.0..2.0f64), h in 0.01..0.2f64) {
        let p = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])));
        let dp = |x: f64| c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + x * 4.0 * c[4]));
        let xs: Vec<f64> = (0..9).map(|k| -0.5 + h * k as f64).collect();
        let d = grid_derivative(&xs.iter().map(|&x| p(x)).collect::<Vec<_>>(), h);
        for (x, v) in xs.iter().zip(d) {
            prop_assert!((v - dp(*x)).abs() < 1e-9 * (1.0 + dp(*x).abs()) / h);
        }
    }

    #[test]
    fn pchip_preserves_monotone_data(steps in prop::collection::vec(0.0..1.0f64, 3..12), u in 0.0..1.0f64) {
        let xs: Vec<f64> = (0..steps.len()).map(|k| k as f64).collect();
        let ys: Vec<f64> = steps.iter().scan(0.0, |s, d| { *s += d; Some(*s) }).collect();
        let x = u * (xs.len() - 1) as f64;
        let v = pchip(&xs, &ys, x);
        let i = (x.floor() as usize).min(xs.len() - 2);
        prop_assert!(v >= ys[i] - 1e-12 && v <= ys[i + 1] + 1e-12);
    }

    #[test]
    fn sqrt_extrapolation_recovers_constant_term(c in prop::array::uniform4(-3.0..3.0f64)) {
        let ts: Vec<f64> = (0..10).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
        let vals: Vec<f64> = ts.iter().map(|t| { let r = t.sqrt(); c[0] + r * (c[1] + r * (c[2] + r * c[3])) }).collect();
        prop_assert!((limit_in_sqrt(&ts, &vals).value - c[0]).abs() < 1e-10);
    }

    #[test]
    fn chebyshev_fit_reproduces_low_degree_maps(a in -1.0..1.0f64, b in -1.0..1.0f64, xi in -0.4..0.4f64, s in -0.3..0.3f64) {
        let f = |u: f64, v: f64| Vec2::new(a * u * u * v + v, b * u - v * v * v);
        let n = 6;
        let us = lobatto_nodes(-0.4, 0.4, n);
        let vs = lobatto_nodes(-0.3, 0.3, n);
        let vals: Vec<Vec<Vec2>> = us.iter().map(|&u| vs.iter().map(|&v| f(u, v)).collect()).collect();
        let c = Cheb2::fit([-0.4, -0.3], [0.4, 0.3], n, &vals);
        let j = c.eval(xi, s);
        prop_assert!((j.value - f(xi, s)).norm() < 1e-13);
        prop_assert!((j.d_xi - Vec2::new(2.0 * a * xi * s, b)).norm() < 1e-12);
        prop_assert!((j.d_sigma_sigma - Vec2::new(0.0, -6.0 * s)).norm() < 1e-11);
    }

    #[test]
    fn fitted_slope_of_a_power_law(p in 0.5..3.0f64, c in 0.1..10.0f64) {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| { let x = (k as f64 + 1.0).ln(); (x, c.ln() + p * x) }).collect();
        prop_assert!((fit_slope(&pts) - p).abs() < 1e-12);
    }
}

#[test]
fn checks_compare_in_the_stated_direction() {
    assert!(Check::at_most("a", 1.0, 1.0).passed());
    assert!(!Check::at_most("a", f64::NAN, 1.0).passed());
    assert!(Check::at_least("b", 1.5, 1.4).passed());
    assert!(!Check::at_least("b", 1.3, 1.4).passed());
}

#[test]
fn cheap_criteria_report_one_line_each() {
    for id in [1, 2, 3] {
        let o = criterion(id).unwrap();
        assert!(o.passed(), "{}", o.line());
        assert!(o.line().starts_with(&format!("PASS criterion {id} ")));
    }
    assert!(criterion(10).is_none());
}
