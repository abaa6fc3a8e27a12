use approx::assert_abs_diff_eq;
use cuspflow_core::cusp::{ChartOptions, CuspChart};
use cuspflow_core::curve::{
    curve_init, initial_density, integrate, node_init, physical_curve, CurveInitData, CurveNode, CurveOptions, State,
};
use cuspflow_core::fields::{AnalyticScalarField, Vec2};
use cuspflow_core::validation::{test_chart, test_field};
use cuspflow_core::Error;
use std::sync::OnceLock;

fn chart_with_density(rho: &str) -> CuspChart {
    CuspChart::build(&test_field(), &AnalyticScalarField::parse(rho).unwrap(), &Vec2::new(0.01, 0.01), ChartOptions::default())
        .unwrap()
}

fn small_options() -> CurveOptions {
    CurveOptions { n_zeta: 7, zeta_max: Some(0.2), t_end: 0.01, n_out: 9, ..CurveOptions::default() }
}

fn small_init() -> &'static CurveInitData {
    static DATA: OnceLock<CurveInitData> = OnceLock::new();
    DATA.get_or_init(|| curve_init(test_chart().unwrap(), &small_options()).unwrap())
}

#[test]
fn constant_density_has_no_drift() {
    let c = chart_with_density("1");
    for zeta in [0.0, 0.15] {
        let n = node_init(&c, &CurveNode::new(&c, zeta).unwrap()).unwrap();
        assert!(n.s0.abs() < 1e-8, "S₀ = {} at ζ = {zeta}", n.s0);
        assert!(n.g2_residual.abs() < 1e-8);
        assert!(n.fuchs < 1e-6);
        assert!(n.rho0 > 0.0);
    }
    assert_abs_diff_eq!(initial_density(&c, 0.0).unwrap(), 2.0, epsilon = 1e-10);
}

#[test]
fn doubling_the_density_doubles_the_mass_amplitude() {
    let (one, two) = (chart_with_density("1 + 1.5*x1"), chart_with_density("2 + 3*x1"));
    for zeta in [-0.2, 0.0, 0.3] {
        assert_abs_diff_eq!(initial_density(&two, zeta).unwrap(), 2.0 * initial_density(&one, zeta).unwrap(), epsilon = 1e-12);
    }
    let a = node_init(&one, &CurveNode::new(&one, 0.1).unwrap()).unwrap();
    let b = node_init(&two, &CurveNode::new(&two, 0.1).unwrap()).unwrap();
    assert_abs_diff_eq!(a.s0, b.s0, epsilon = 1e-8);
}

#[test]
fn axis_node_reproduces_line_data() {
    let data = small_init();
    let mid = &data.init[data.init.len() / 2];
    assert_abs_diff_eq!(mid.rho0, 2.0, epsilon = 1e-10);
    assert_abs_diff_eq!(mid.s0, 0.2, epsilon = 1e-6);
    assert_abs_diff_eq!(mid.df1_ds, -3.0, epsilon = 1e-3);
    assert_abs_diff_eq!(mid.s0_slope, -3.75, epsilon = 1e-3);
    let full = mid.full.as_ref().expect("middle node carries the full linearization");
    assert!(full.max_imag < 1e-6);
    // The complete Jacobian is not block-triangular like the template; only its real spectrum is checked.
    assert!(full.spectrum.iter().all(|&v| v <= 1e-6));
    for n in &data.init {
        assert!(n.rho0 > 0.0 && n.g2_residual.abs() < 1e-8 && n.fuchs < 1e-6);
    }
    assert!(data.spectrum_deviation() < 1e-6);
}

fn distance(a: &[State], b: &[State]) -> f64 {
    a.iter().zip(b).flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max)
}

/// The startup layer decays with the `−½` mode, so halving `T_start` shrinks the
/// end-state change by `2^{3/2}` rather than 2.
#[test]
fn startup_layer_shrinks_under_halving() {
    let chart = test_chart().unwrap();
    let ends: Vec<Vec<State>> = [4e-4, 2e-4, 1e-4]
        .iter()
        .map(|&t_start| {
            let sol = integrate(chart, small_init(), &CurveOptions { t_start, ..small_options() }).unwrap();
            sol.states.last().unwrap().clone()
        })
        .collect();
    let ratio = distance(&ends[0], &ends[1]) / distance(&ends[1], &ends[2]);
    println!("T_start halving ratio {ratio:.4}");
    assert!(ratio >= 1.7, "startup error is not first order: ratio {ratio}");
    assert!((ratio - 2f64.powf(1.5)).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn integrated_curve_keeps_symmetry_and_positivity() {
    let chart = test_chart().unwrap();
    let sol = integrate(chart, small_init(), &small_options()).unwrap();
    let mid = sol.nodes.len() / 2;
    for level in &sol.states {
        assert!(level.iter().all(|u| u[0] > 0.0));
        assert!(level[mid][2].abs() < 1e-8 && level[mid][4].abs() < 1e-8);
        // Mirror nodes carry mirrored states.
        for j in 0..mid {
            let (a, b) = (level[j], level[sol.nodes.len() - 1 - j]);
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-8);
            assert_abs_diff_eq!(a[2], -b[2], epsilon = 1e-8);
        }
    }
    let t = 1.0 + 0.006;
    let curve = physical_curve(&sol, chart, t).unwrap();
    assert!(!curve.is_empty());
    for s in &curve {
        let bt = t - sol.nodes.iter().find(|n| n.zeta == s.zeta).unwrap().tau;
        assert!(s.admissible(), "{:?}", s.impingement);
        assert!(s.eta > 0.0);
        assert!(s.fold_distance < bt, "fold distance {} at T = {bt}", s.fold_distance);
    }
    assert!(physical_curve(&sol, chart, 0.99).is_err());
}

#[test]
fn spectral_gate_blocks_integration() {
    let mut data = small_init().clone();
    data.init[0].spectrum[4] = 1.0;
    let e = integrate(test_chart().unwrap(), &data, &small_options()).unwrap_err();
    assert!(matches!(e, Error::Structure(_)), "{e}");
    assert_eq!(e.exit_code(), 3);
}
