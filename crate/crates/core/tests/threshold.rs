use dmsol_core::energy::Problem;
use dmsol_core::lattice::BoxPolicy;
use dmsol_core::minimizer::{minimize, SolveConfig};
use dmsol_core::profile::{DiffractionMeasure, Nonlinearity};
use dmsol_core::threshold::{
    lambda_cr_estimate, negative_energy_certificate, pure_power_threshold, r_quotient_max, scaling_checks, threshold_lower_bound, threshold_report,
    threshold_upper_bound,
};
use dmsol_core::Error;
use proptest::prelude::*;

fn boxed(radius: usize) -> SolveConfig {
    SolveConfig { box_policy: BoxPolicy::new(radius, 1e-13).unwrap(), ..Default::default() }
}

fn sextic(d_av: f64) -> Problem {
    Problem::new(d_av, DiffractionMeasure::dirac(), Nonlinearity::pure_power(1.0 / 6.0, 6.0).unwrap(), 1.0).unwrap()
}

#[test]
fn sextic_quotient_scales_exactly() {
    // N(tf) = t⁶N(f) and ‖D₊tf‖² = t²‖D₊f‖², so R(λ) = R(1)λ²;
    // the single site gives the lower bound λ²/12
    let r: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&l: &f64| r_quotient_max(&sextic(1.0), l, &boxed(12)).unwrap().r_hat / (l * l))
        .collect();
    for v in &r {
        assert!((v - r[0]).abs() < 1e-10 * r[0], "{r:?}");
        assert!(*v >= 1.0 / 12.0 - 1e-14);
    }
}

#[test]
fn sextic_threshold_matches_scaling_prediction() {
    let p = sextic(1.0);
    let rep = threshold_report(&p, &[1.0, 2.0, 3.0, 4.0], &boxed(12), 200).unwrap();
    let predicted = pure_power_threshold(1.0, rep.r0_hat.unwrap(), 6.0);
    assert!(predicted <= 6f64.sqrt());
    let cr = rep.lambda_cr_hat.unwrap();
    assert!(rep.within_grid);
    assert!((cr - predicted).abs() < 2e-3 * predicted, "{cr} vs {predicted}");
    // bisection trace signs agree with the side of the estimate
    assert!(rep.trace.iter().all(|s| s.negative == (s.lambda > cr)));
}

#[test]
fn estimate_rejects_bad_brackets() {
    let cfg = boxed(12);
    assert!(matches!(lambda_cr_estimate(&sextic(1.0), (4.0, 5.0), &cfg, 0), Err(Error::InvalidBracket { .. })));
    assert!(lambda_cr_estimate(&sextic(0.0), (1.0, 4.0), &cfg, 0).is_err());
}

#[test]
fn certificate_bounds_the_minimum() {
    let p = Problem::new(1.0, DiffractionMeasure::dirac(), Nonlinearity::kerr(), 0.5).unwrap();
    let cert = negative_energy_certificate(&p, 400).unwrap();
    let e = minimize(&p, &boxed(60)).unwrap().energy;
    assert!(cert.energy >= e - 1e-12, "{} < {e}", cert.energy);
    assert!(cert.energy < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sandwich_is_ordered(l0 in 0.1f64..10.0, r0 in 1e-3f64..10.0, d in 0.1f64..4.0, g in 2.5f64..8.0) {
        let lo = threshold_lower_bound(l0, r0, d, g);
        let hi = threshold_upper_bound(l0, r0, d, g);
        prop_assert!(lo <= hi);
        // the pure-power threshold lies between the bounds built from its own law
        let cr = pure_power_threshold(d, r0 / l0.powf((g - 2.0) / 2.0), g);
        prop_assert!(lo <= cr * (1.0 + 1e-12) && cr <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn exact_scaling_law_passes(r0 in 1e-3f64..10.0, g in 2.5f64..8.0) {
        let s: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 4.0].iter().map(|&l: &f64| (l, r0 * l.powf((g - 2.0) / 2.0))).collect();
        let rep = scaling_checks(&s, g, 1e-9, None).unwrap();
        prop_assert!(rep.scaling_pass && (rep.worst_ratio - 1.0).abs() < 1e-12);
        prop_assert_eq!(rep.pairs, 10);
    }
}

#[test]
fn scaling_violation_detected() {
    // a quotient that grows slower than λ^{(γ₀-2)/2}
    let s = [(1.0, 1.0), (2.0, 1.5)];
    assert!(!scaling_checks(&s, 4.0, 1e-3, None).unwrap().scaling_pass);
    assert!(scaling_checks(&s[..1], 4.0, 1e-3, None).is_err());
}
