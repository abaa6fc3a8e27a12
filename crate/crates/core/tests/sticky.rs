use cuspflow_core::point_mass::Cubic1DProblem;
use cuspflow_core::sticky::ParticleSystem;
use cuspflow_core::validation::{fit_slope, oracle_comparison};
use proptest::prelude::*;

fn system() -> impl Strategy<Value = ParticleSystem> {
    prop::collection::vec((0.1..2.0f64, -1.0..1.0f64, 0.01..0.2f64), 2..60).prop_map(|cells| {
        let mut x = 0.0;
        let mut sys = ParticleSystem { positions: vec![], masses: vec![], velocities: vec![], counts: vec![], time: 0.0 };
        for (m, v, gap) in cells {
            x += gap;
            sys.positions.push(x);
            sys.masses.push(m);
            sys.velocities.push(v);
            sys.counts.push(1);
        }
        sys
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mergers_conserve_mass_and_momentum(sys in system(), t in 0.1..5.0f64) {
        let (end, report) = sys.evolve(t).unwrap();
        prop_assert!(report.mass_drift <= 1e-12);
        prop_assert!(report.momentum_drift <= 1e-12);
        prop_assert!(end.strictly_sorted() || end.len() == 1);
        prop_assert_eq!(end.counts.iter().sum::<usize>(), sys.len());
        prop_assert_eq!(end.len() + report.merges, sys.len());
    }
}

#[test]
fn no_mergers_well_before_blow_up() {
    let p = Cubic1DProblem::canonical();
    let sys = ParticleSystem::discretize(|x| p.density(x), |x| p.velocity(x), -0.5, 0.5, 10_000).unwrap();
    let (end, report) = sys.evolve(0.9 * p.t0()).unwrap();
    assert_eq!(report.merges, 0);
    assert_eq!(end.len(), 10_000);
}

#[test]
fn cluster_mass_converges_under_refinement() {
    let p = Cubic1DProblem::canonical();
    let ns = [1_000usize, 2_000, 4_000, 8_000, 16_000];
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let c = oracle_comparison(&p, 0.04, [-0.5, 0.5], n).unwrap();
            ((1.0 / n as f64).ln(), c.mass_rel.max(1e-16).ln())
        })
        .collect();
    let order = fit_slope(&pts);
    assert!(order >= 0.5, "observed order {order}");
}

#[test]
fn linear_density_oracle_matches_tracker() {
    let p = Cubic1DProblem::with_coefficients(1.0, 0.8, 0.05, 1.0, 6.0, 1.0).unwrap();
    let c = oracle_comparison(&p, 0.04, [-0.5, 0.5], 50_000).unwrap();
    assert!(c.mass_rel < 5e-3, "{c:?}");
    assert!(c.position_abs < 2e-3, "{c:?}");
}
