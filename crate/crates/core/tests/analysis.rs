use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use fluxring::analysis::{
    block_curves, detect_period, hardcore_optimal_set, optimal_flux, perron_frobenius_flux,
    scan_flux, spiral_state, thermal_scan, verify_block_lemma, verify_doubling, verify_even,
    verify_odd, verify_relation, verify_singlet, AnalysisError, ThermalOptions,
    VerificationReport,
};
use fluxring::basis::Sector;
use fluxring::fixtures::{random_hop, random_model, random_potential, remark5, uniform};
use fluxring::model::{angle_distance, Interaction, ModelSpec};
use fluxring::spectra::Solver;

fn hardcore(spec: ModelSpec) -> ModelSpec {
    spec.with_interaction(Interaction::HardCore).unwrap()
}

fn finite(spec: ModelSpec, u: f64) -> ModelSpec {
    let l = spec.sites();
    spec.with_interaction(Interaction::Finite(vec![u; l])).unwrap()
}

fn assert_passed(report: &VerificationReport) {
    let failures: Vec<_> = report.failures().collect();
    assert!(report.passed, "{} {}: {failures:?}", report.claim, report.instance);
}

fn observed(report: &VerificationReport, key: &str) -> f64 {
    report.observations[key].as_f64().unwrap()
}

#[test]
fn optimal_flux_formulas() {
    assert_eq!(optimal_flux(4, 2), 0.0);
    assert!((optimal_flux(4, 4) - PI).abs() < 1e-15);
    assert!((optimal_flux(5, 2) - PI).abs() < 1e-15);
    assert!(optimal_flux(5, 4).abs() < 1e-15);
    assert!((perron_frobenius_flux(4, 2) - PI).abs() < 1e-15);
    assert_eq!(perron_frobenius_flux(5, 2), 0.0);
    let set = hardcore_optimal_set(6, 4);
    assert_eq!(set.len(), 4);
    for (k, phi) in set.iter().enumerate() {
        assert!(angle_distance(*phi, k as f64 * FRAC_PI_2) < 1e-12);
    }
}

#[test]
fn even_case_examples() {
    let spec = finite(uniform(4, 2).unwrap(), 3.0)
        .with_potential(random_potential(4, 1.0, 3))
        .unwrap();
    let report = verify_even(&spec, 180).unwrap();
    assert_passed(&report);

    let half = uniform(4, 4).unwrap();
    let report = verify_even(&half, 180).unwrap();
    assert_passed(&report);
    assert!((observed(&report, "min_energy") + 4.0 * SQRT_2).abs() < 1e-10);

    let odd_ring = finite(random_hop(5, 2, 4).unwrap(), 1.0);
    assert_passed(&verify_even(&odd_ring, 180).unwrap());

    let hard = hardcore(uniform(4, 2).unwrap());
    let report = verify_even(&hard, 180).unwrap();
    assert_passed(&report);
    assert!((observed(&report, "detected_period") - PI).abs() < 1e-12);
}

#[test]
fn even_case_refuses_odd_particle_numbers() {
    let err = verify_even(&uniform(4, 3).unwrap(), 64).unwrap_err();
    assert!(matches!(err, AnalysisError::HypothesisViolated(_)));
}

#[test]
fn detected_periods() {
    for seed in 0..3 {
        let spec = random_hop(5, 5, seed).unwrap();
        let curve = scan_flux(&spec, Sector::new(3, 2), 120, Solver::Auto).unwrap();
        assert!((detect_period(&curve, 1e-9) - PI).abs() < 1e-12);
    }
    let spec = finite(random_hop(4, 2, 1).unwrap(), 2.0);
    let curve = scan_flux(&spec, Sector::new(1, 1), 120, Solver::Auto).unwrap();
    assert!((detect_period(&curve, 1e-9) - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn odd_half_filling() {
    let report = verify_odd(&uniform(3, 3).unwrap(), 120).unwrap();
    assert_passed(&report);
    assert!((observed(&report, "energy_at_half_pi") + 2.0 * 3f64.sqrt()).abs() < 1e-10);
    let report = verify_odd(&random_hop(5, 5, 2).unwrap(), 120).unwrap();
    assert_passed(&report);
}

#[test]
fn odd_half_filling_refuses_potential_and_interaction() {
    let with_v = uniform(3, 3)
        .unwrap()
        .with_potential(vec![0.0, 0.5, 0.0])
        .unwrap();
    assert!(matches!(
        verify_odd(&with_v, 120),
        Err(AnalysisError::HypothesisViolated(_))
    ));
    assert!(matches!(
        verify_odd(&finite(uniform(3, 3).unwrap(), 1.0), 120),
        Err(AnalysisError::HypothesisViolated(_))
    ));
    assert!(matches!(
        verify_odd(&remark5(50.0).unwrap(), 120),
        Err(AnalysisError::HypothesisViolated(_))
    ));
}

#[test]
fn doubling_identity() {
    assert_passed(&verify_doubling(&uniform(3, 1).unwrap(), 64).unwrap());
    assert_passed(&verify_doubling(&random_hop(5, 1, 9).unwrap(), 64).unwrap());
}

#[test]
fn singlet_examples() {
    for (seed, u) in [(0, -3.0), (1, 0.0), (2, 2.0), (3, 7.0)] {
        let spec = random_model(4, 2, 1.0, u, seed).unwrap();
        assert_passed(&verify_singlet(&spec).unwrap());
    }
    let control = uniform(4, 2).unwrap().with_flux(PI);
    let report = verify_singlet(&control).unwrap();
    assert!(!report.passed);
    assert_eq!(report.observations["spins"], serde_json::json!([0.0, 1.0]));

    let odd = uniform(3, 3).unwrap().with_flux(FRAC_PI_2);
    let report = verify_singlet(&odd).unwrap();
    assert_passed(&report);
    assert_eq!(report.observations["spins"], serde_json::json!([0.5]));
}

#[test]
fn relation_examples() {
    let report = verify_relation(&hardcore(uniform(4, 2).unwrap())).unwrap();
    assert_passed(&report);
    assert!((observed(&report, "F_N(phi_f)") + 2.0 * SQRT_2).abs() < 1e-12);
    assert!((observed(&report, "F_N(phi_s)") + 2.0).abs() < 1e-12);

    let spec = hardcore(random_model(6, 2, 1.0, 0.0, 5).unwrap());
    assert_passed(&verify_relation(&spec).unwrap());
    assert_passed(&verify_relation(&hardcore(uniform(5, 4).unwrap())).unwrap());
}

#[test]
fn spiral_small_rings() {
    for l in [3, 4] {
        let (state, report) = spiral_state(&hardcore(uniform(l, 2).unwrap())).unwrap();
        assert_passed(&report);
        assert_eq!(state.state.len(), state.basis.dim());
    }
    assert!(matches!(
        spiral_state(&hardcore(uniform(5, 4).unwrap())),
        Err(AnalysisError::NotFourNPlusTwo(4))
    ));
}

#[test]
fn block_lemma_examples() {
    let spec = hardcore(uniform(4, 2).unwrap());
    let curves = block_curves(&spec, 16).unwrap();
    assert_eq!(curves.blocks.len(), 1);
    assert_eq!(curves.blocks[0].period, 2);
    assert_eq!(curves.blocks[0].dim(), 12);
    assert_passed(&verify_block_lemma(&spec, 90).unwrap());

    let six = hardcore(uniform(6, 4).unwrap());
    let curves = block_curves(&six, 8).unwrap();
    let mut periods: Vec<usize> = curves.blocks.iter().map(|b| b.period).collect();
    periods.sort();
    periods.dedup();
    assert_eq!(periods, vec![2, 4]);
}

#[test]
fn thermal_examples() {
    let opts = ThermalOptions {
        betas: vec![1.0],
        grid: 120,
        ..ThermalOptions::default()
    };
    assert_passed(&thermal_scan(&uniform(3, 3).unwrap(), &opts).unwrap());
    assert_passed(&thermal_scan(&finite(uniform(4, 2).unwrap(), 1.0), &opts).unwrap());

    // at low temperature the maximizer is recorded, not checked
    let cold = ThermalOptions {
        betas: vec![8.0],
        grid: 120,
        ..ThermalOptions::default()
    };
    let report = thermal_scan(&uniform(3, 3).unwrap(), &cold).unwrap();
    assert!(report.observations.contains_key("beta=8: argmax"));
}
