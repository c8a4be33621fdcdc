use dmsol_core::profile::{DiffractionMeasure, Nonlinearity, PiecewiseProfile, Potential};
use dmsol_core::quadrature::gauss_legendre;
use dmsol_core::Complex64;
use proptest::prelude::*;

#[test]
fn model_measure_is_uniform_on_unit_interval() {
    let m = DiffractionMeasure::model(16).unwrap();
    assert!((m.total_mass() - 1.0).abs() < 1e-15);
    assert_eq!(m.support_bound(), 1.0);
    for k in 0..=6 {
        assert!((m.moment(k) - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "moment {k}");
    }
    assert!(m.nodes().iter().all(|&r| (0.0..=1.0).contains(&r)));
}

#[test]
fn moments_converge_with_refinement() {
    // |r|^{1/2} is not a polynomial, so the error only decays with n
    let exact = 2.0 / 3.0;
    let err = |n| {
        let m = DiffractionMeasure::model(n).unwrap();
        (m.atoms().iter().map(|&(r, w)| w * r.sqrt()).sum::<f64>() - exact).abs()
    };
    assert!(err(16) < err(4) && err(4) < err(1));
}

#[test]
fn gauss_legendre_exact_to_degree() {
    for n in 1..=12 {
        let (x, w) = gauss_legendre(n);
        for k in 0..2 * n {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-13, "n {n} k {k}");
        }
    }
}

#[test]
fn uniform_measure_moments() {
    let m = DiffractionMeasure::uniform(-1.0, 3.0, 8).unwrap();
    assert!((m.moment(1) - 1.0).abs() < 1e-14);
    // ∫ r² over [-1, 3] / 4 = (27 + 1) / 12
    assert!((m.moment(2) - 28.0 / 12.0).abs() < 1e-13);
    assert!(DiffractionMeasure::uniform(1.0, 1.0, 4).is_err());
}

#[test]
fn rejects_bad_atoms() {
    assert!(DiffractionMeasure::new(vec![]).is_err());
    assert!(DiffractionMeasure::new(vec![(0.0, -1.0)]).is_err());
    assert!(DiffractionMeasure::new(vec![(f64::NAN, 1.0)]).is_err());
    assert!(DiffractionMeasure::new(vec![(0.0, 0.0)]).is_err());
}

#[test]
fn profile_integral_is_piecewise_linear() {
    let p = PiecewiseProfile::model();
    assert_eq!(p.period(), 2.0);
    assert!((p.integral_at(0.5) - 0.5).abs() < 1e-15);
    assert!((p.integral_at(1.5) - 0.5).abs() < 1e-15);
    assert!(p.integral_at(2.0).abs() < 1e-15);
    // periodic with zero mean
    assert!((p.integral_at(2.25) - 0.25).abs() < 1e-15);
}

#[test]
fn kerr_parameters() {
    let k = Nonlinearity::kerr();
    assert_eq!((k.gamma0(), k.gamma1(), k.gamma2(), k.kappa()), (4.0, 4.0, 4.0, Some(4.0)));
    let z = Complex64::new(0.6, -0.8);
    assert!((k.p(z) - z).norm() < 1e-15);
    assert!(k.value(-1.0).is_err());
}

fn smooth_value(a: f64) -> f64 {
    a.powi(4) + a.powi(6) / (1.0 + a * a)
}

fn smooth_derivative(a: f64) -> f64 {
    4.0 * a.powi(3) + (6.0 * a.powi(5) + 4.0 * a.powi(7)) / (1.0 + a * a).powi(2)
}

#[test]
fn custom_potential_assumptions_sampled() {
    let v = Nonlinearity::new(Potential::Custom { value: smooth_value, derivative: smooth_derivative }, 4.0, 4.0, 6.0, None).unwrap();
    let amps: Vec<f64> = (1..200).map(|k| k as f64 * 0.05).collect();
    let rep = v.check_assumptions(&amps, &[1.0, 1.5, 2.0, 4.0], 0.5);
    assert!(rep.a2_holds && rep.a3_holds && rep.scaling_holds, "{rep:?}");
    // γ₀ = 5 fails: V is quartic at small amplitude
    let bad = Nonlinearity::new(Potential::Custom { value: smooth_value, derivative: smooth_derivative }, 5.0, 4.0, 6.0, None).unwrap();
    assert!(!bad.check_assumptions(&amps, &[2.0], 0.5).a2_holds);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_is_gauge_covariant(re in -3.0f64..3.0, im in -3.0f64..3.0, theta in -3.2f64..3.2) {
        let v = Nonlinearity::power_sum(vec![(0.25, 4.0), (-0.05, 6.0), (0.1, 3.0)]).unwrap();
        let z = Complex64::new(re, im);
        let u = Complex64::from_polar(1.0, theta);
        prop_assert!((v.p(u * z) - u * v.p(z)).norm() <= 1e-12 * (1.0 + v.p(z).norm()));
    }

    #[test]
    fn p_matches_derivative(a in 0.01f64..3.0) {
        let v = Nonlinearity::power_sum(vec![(0.25, 4.0), (0.1, 3.0)]).unwrap();
        let p = v.p(Complex64::new(a, 0.0)).re;
        prop_assert!((p - v.derivative(a).unwrap()).abs() <= 1e-13 * p.abs().max(1.0));
        let h = 1e-5 * a.max(1.0);
        let fd = (v.value(a + h).unwrap() - v.value(a - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - p).abs() <= 1e-7 * p.abs().max(1.0));
    }
}
