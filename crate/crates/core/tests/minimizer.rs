use dmsol_core::energy::Problem;
use dmsol_core::lattice::BoxPolicy;
use dmsol_core::minimizer::{curve_violations, energy_curve, minimize, CurvePoint, CurveViolation, SolveConfig, SolveStatus};
use dmsol_core::profile::{DiffractionMeasure, Nonlinearity};
use proptest::prelude::*;

fn boxed(radius: usize) -> SolveConfig {
    SolveConfig { box_policy: BoxPolicy::new(radius, 1e-13).unwrap(), ..Default::default() }
}

fn dirac(d_av: f64, v: Nonlinearity, lambda: f64) -> Problem {
    Problem::new(d_av, DiffractionMeasure::dirac(), v, lambda).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn anticontinuum_pure_power(lambda in 0.3f64..5.0, s in prop::sample::select(vec![3.0, 4.0, 6.0]), c in 0.1f64..1.0) {
        // with d_av = 0 the single-site field is optimal: E = -c λ^{s/2}
        let p = dirac(0.0, Nonlinearity::pure_power(c, s).unwrap(), lambda);
        let r = minimize(&p, &boxed(6)).unwrap();
        let e = -c * lambda.powf(s / 2.0);
        prop_assert_eq!(r.status, SolveStatus::Converged);
        prop_assert!((r.energy - e).abs() <= 1e-12 * e.abs(), "{} vs {e}", r.energy);
        prop_assert!((r.omega - s * e / lambda).abs() <= 1e-11 * e.abs() / lambda);
    }
}

#[test]
fn ground_state_contract() {
    let p = dirac(1.0, Nonlinearity::kerr(), 3.0);
    let r = minimize(&p, &boxed(30)).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert!((r.field.norm_sq() - 3.0).abs() < 1e-12);
    assert!(r.energy < 0.0 && r.energy <= r.initial_energy);
    assert!(r.residual < 1e-8);
    // γ₀ > 2 gives ω < 2E/λ
    assert!(r.omega < 2.0 * r.energy / 3.0);
    // every start reaches the same minimum
    for s in r.starts.iter().filter(|s| s.converged) {
        assert!((s.energy - r.energy).abs() < 1e-9);
    }
    // the history is a descent
    assert!(r.history.windows(2).all(|w| w[1].0 <= w[0].0 + 1e-12));
}

#[test]
fn subthreshold_sextic_has_no_negative_energy() {
    // ‖f‖∞⁴ ≤ ‖f‖₂²‖D₊f‖₂² gives R(λ) ≤ λ²/6, so E_λ = 0 while λ²/6 < d_av/2
    let p = dirac(1.0, Nonlinearity::pure_power(1.0 / 6.0, 6.0).unwrap(), 1.0);
    let r = minimize(&p, &boxed(16)).unwrap();
    assert_eq!(r.status, SolveStatus::NoNegativeEnergy);
    assert!(r.energy > -1e-10);
}

#[test]
fn kerr_curve_is_subadditive() {
    let p = dirac(1.0, Nonlinearity::kerr(), 1.0);
    let curve = energy_curve(&p, &[1.0, 2.0, 3.0, 4.0, 6.0], &boxed(30)).unwrap();
    assert!(curve.failures.is_empty(), "{:?}", curve.failures);
    assert!(curve.violations.is_empty(), "{:?}", curve.violations);
    assert!(curve.points.windows(2).all(|w| w[1].energy < w[0].energy));
}

#[test]
fn curve_checks_flag_violations() {
    let pt = |lambda, energy| CurvePoint { lambda, energy, omega: -1.0, residual: 0.0, status: SolveStatus::Converged };
    let v = curve_violations(&[pt(1.0, -1.0), pt(2.0, -1.5), pt(3.0, 0.5)]);
    assert!(v.iter().any(|x| matches!(x, CurveViolation::Positive { .. })));
    assert!(v.iter().any(|x| matches!(x, CurveViolation::Increasing { .. })));
    // E(1) + E(1) = E(2): not strictly subadditive
    let v = curve_violations(&[pt(1.0, -1.0), pt(2.0, -2.0)]);
    assert!(matches!(v[..], [CurveViolation::NotStrictlySubadditive { .. }]));
}

#[test]
fn config_validation() {
    assert!(SolveConfig { max_iters: 0, ..Default::default() }.validate().is_err());
    assert!(energy_curve(&dirac(1.0, Nonlinearity::kerr(), 1.0), &[2.0, 1.0], &boxed(8)).is_err());
    assert!(BoxPolicy::new(0, 1e-13).is_err());
    assert!(BoxPolicy::new(4, 0.0).is_err());
}
