use approx::assert_abs_diff_eq;
use cuspflow_core::characteristics::{preimages, push_forward, Window};
use cuspflow_core::cusp::CuspChart;
use cuspflow_core::point_mass::companion_roots;
use cuspflow_core::validation::{curved_chart, test_axis_problem, test_chart};
use proptest::prelude::*;

fn curved() -> &'static CuspChart {
    curved_chart().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn root_and_gas_invariants(xi in -0.25..0.25f64, log_t in (1e-5f64).ln()..(1e-2f64).ln(), st in -1.0..1.0f64) {
        let c = curved();
        let bt = log_t.exp();
        let row = c.row(xi).unwrap();
        let g = c.gas_state(row.tau + bt, xi, st * bt).unwrap();
        let r = &g.roots;
        prop_assert!(r.residuals.iter().all(|v| v.abs() < 1e-12));
        prop_assert!(r.z_minus < 0.0 && r.z_plus > 0.0);
        prop_assert!(r.kantorovich_ok);
        prop_assert!(g.rho_minus > 0.0 && g.rho_plus > 0.0);
        prop_assert!((r.sigma_tilde - st).abs() < 1e-9);
        // Both companions share the Eulerian point of the middle sheet.
        let t = row.tau + bt;
        let y_mid = push_forward(&c.field, t, &c.x_first(xi, st * bt).unwrap().0).y;
        prop_assert!((push_forward(&c.field, t, &g.x_minus).y - y_mid).norm() < 1e-11);
        prop_assert!((push_forward(&c.field, t, &g.x_plus).y - y_mid).norm() < 1e-11);
    }

    #[test]
    fn surrogate_matches_direct_flow(xi in -0.3..0.3f64, sigma in -0.2..0.2f64) {
        let c = curved();
        let direct = c.flow_coordinates(xi, sigma).unwrap();
        prop_assert!((c.x_jet(xi, sigma).unwrap().value - direct).norm() < 1e-11);
    }
}

#[test]
fn chart_rows_satisfy_the_defining_relations() {
    let c = curved();
    for r in &c.rows {
        assert!(r.stationarity.abs() < 1e-10);
        assert!((r.r2_star.norm() - 1.0).abs() < 1e-10);
        assert!(r.omega2.abs() < 1e-8);
        assert!(r.omega1 > 0.0 && r.omega3 > 0.0 && r.c1 > 0.0);
        assert_abs_diff_eq!(r.tau, -1.0 / r.frame.lambda1, epsilon = 1e-14);
        assert!(r.tau >= c.singularity.t0 - 1e-14);
    }
    let mid = c.row(0.0).unwrap();
    assert!((mid.gamma - c.singularity.x0).norm() < 1e-12);
}

#[test]
fn companions_agree_with_general_preimage_search() {
    let c = curved();
    for (xi, st, bt) in [(0.0, 0.0, 1e-3), (0.1, 0.5, 5e-3), (-0.15, -0.8, 2e-3)] {
        let row = c.row(xi).unwrap();
        let t = row.tau + bt;
        let g = c.gas_state(t, xi, st * bt).unwrap();
        let x_mid = c.x_first(xi, st * bt).unwrap().0;
        let y = push_forward(&c.field, t, &x_mid).y;
        let w = Window::new([x_mid.x - 0.2, x_mid.y - 0.2], [x_mid.x + 0.2, x_mid.y + 0.2]);
        let p = preimages(&c.field, t, &y, &w, &[g.x_minus, x_mid, g.x_plus]).unwrap();
        assert_eq!(p.points.len(), 3);
        let near = |x: &cuspflow_core::fields::Vec2| p.points.iter().map(|q| (q.x - x).norm()).fold(f64::INFINITY, f64::min);
        assert!(near(&g.x_minus) < 1e-10 && near(&g.x_plus) < 1e-10 && near(&x_mid) < 1e-10);
    }
}

#[test]
fn beta_limits_match_chart_coefficients() {
    let c = curved();
    for (xi, st) in [(0.0, 0.3), (0.15, -0.6), (-0.2, 1.0)] {
        let l = c.amplitude_limits(xi, st).unwrap();
        let r = &l.row;
        assert!((l.beta1.value - r.c1.sqrt()).abs() < 1e-4, "{} vs {}", l.beta1.value, r.c1.sqrt());
        let b0 = -(r.c2(st) + r.c1 * r.c3) / 2.0;
        assert!((l.beta0.value - b0).abs() < 1e-4, "{} vs {b0}", l.beta0.value);
    }
}

/// On the straight test field the line `x₂ = 0` is invariant, so the plane
/// companions of a middle point on it are the line companions.
#[test]
fn straight_field_reduces_to_the_line() {
    let c = test_chart().unwrap();
    let p = test_axis_problem().unwrap();
    for (st, bt) in [(0.0, 1e-3), (0.7, 4e-3), (-0.4, 1e-2)] {
        let t = 1.0 + bt;
        let g = c.gas_state(t, 0.0, st * bt).unwrap();
        let x_mid = c.x_first(0.0, st * bt).unwrap().0;
        assert_abs_diff_eq!(x_mid.y, 0.0, epsilon = 1e-13);
        let line = companion_roots(&p, t, x_mid.x).unwrap();
        assert_abs_diff_eq!(g.x_minus.x, line.minus, epsilon = 1e-10);
        assert_abs_diff_eq!(g.x_plus.x, line.plus, epsilon = 1e-10);
        assert_abs_diff_eq!(g.x_minus.y, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn points_off_the_chart_are_rejected() {
    let c = curved();
    assert!(c.x_jet(0.5, 0.0).is_err());
    assert!(c.gas_state(c.singularity.t0 - 0.01, 0.0, 0.0).is_err());
}
