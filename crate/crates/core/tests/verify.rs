use dmsol_core::energy::Problem;
use dmsol_core::lattice::LatticeField;
use dmsol_core::profile::{DiffractionMeasure, Nonlinearity};
use dmsol_core::random::{complex_gaussian, rng};
use dmsol_core::verify::{
    bilinear_bound, bilinear_check, closed_form_check, cos_sin_partition, evolution_bounds_check, functional_inequalities_check, ims_check,
    n_splitting_error, pointwise_splitting_ratio, splitting_check, splitting_envelope, EstimateReport,
};
use dmsol_core::Complex64;
use proptest::prelude::*;

fn model_kerr() -> Problem {
    Problem::new(1.0, DiffractionMeasure::model(8).unwrap(), Nonlinearity::kerr(), 1.0).unwrap()
}

fn all_checks(seed: u64, trials: usize) -> Vec<EstimateReport> {
    vec![
        ims_check(trials, seed),
        closed_form_check().unwrap(),
        evolution_bounds_check(trials, seed).unwrap(),
        bilinear_check(trials, seed, 0.5, &[0, 4, 8, 16]).unwrap(),
        functional_inequalities_check(trials, seed).unwrap(),
        splitting_check(trials, seed, &model_kerr(), &[2, 4, 8, 16], 0.25).unwrap(),
    ]
}

#[test]
fn checks_pass_and_replay() {
    let first = all_checks(9, 4);
    for r in &first {
        assert!(r.pass, "{} failed: {r:?}", r.id);
        assert!(r.worst_ratio <= 1.0 + 1e-9 && r.identity_error <= 1e-11);
    }
    assert_eq!(first, all_checks(9, 4));
}

#[test]
fn witness_names_the_seed() {
    let r = ims_check(3, 77);
    let w = r.witness.expect("a worst trial");
    assert_eq!(w.seed, 77);
    assert!(w.trial < 3);
}

#[test]
fn bilinear_bound_shape() {
    assert_eq!(bilinear_bound(0.0, 0), 1.0);
    assert_eq!(bilinear_bound(0.0, 3), 0.0);
    assert_eq!(bilinear_bound(1.0, 0), 1.0);
    let b: Vec<f64> = (0..80).step_by(2).map(|s| bilinear_bound(0.5, s)).collect();
    assert!(b.windows(2).all(|w| w[1] <= w[0]));
    assert!(*b.last().unwrap() < 1e-20);
}

#[test]
fn envelope_shape() {
    assert_eq!(splitting_envelope(0, 0.25), 1.0);
    assert_eq!(splitting_envelope(1, 0.25), 1.0);
    let e: Vec<f64> = (1..60).map(|s| splitting_envelope(s, 0.25)).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
}

/// `f₁` on `[-3, 0]` and its mirror image on `[s, s+3]`.
fn separated(s: usize, seed: u64) -> (LatticeField, LatticeField) {
    let mut g = rng(seed);
    let vals: Vec<Complex64> = (0..4).map(|_| complex_gaussian(&mut g)).collect();
    let radius = s + 4;
    let f1 = LatticeField::from_fn(radius, |x| if (-3..=0).contains(&x) { vals[(-x) as usize] } else { Complex64::new(0.0, 0.0) });
    let f2 = LatticeField::from_fn(radius, |x| {
        let k = x - s as i64;
        if (0..=3).contains(&k) {
            vals[k as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (f1, f2)
}

#[test]
fn n_splitting_decays_with_separation() {
    // B = 1 for the model measure
    let p = model_kerr();
    for seed in 0..4 {
        let seps = [4usize, 8, 12, 16, 24, 32, 40, 48];
        let errs: Vec<f64> = seps
            .iter()
            .map(|&s| {
                let (f1, f2) = separated(s, seed);
                n_splitting_error(&p, &f1, &f2).unwrap() / (f1.norm2() * f2.norm2())
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{errs:?}");
        for (s, e) in seps.iter().zip(&errs) {
            if *s >= 40 {
                assert!(*e < 1e-8, "s {s}: {e}");
            }
        }
    }
}

#[test]
fn cos_sin_partition_is_unity() {
    let [a, b, c] = cos_sin_partition(20, -4.0, 5.0, 3.0);
    for x in a.sites() {
        let s = a.get(x).norm_sqr() + b.get(x).norm_sqr() + c.get(x).norm_sqr();
        assert!((s - 1.0).abs() < 1e-15);
    }
    assert!((a.get(-20).re - 1.0).abs() < 1e-15 && (c.get(20).re - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pointwise_splitting_symmetric_and_bounded(zr in -10.0f64..10.0, zi in -10.0f64..10.0, wr in -10.0f64..10.0, wi in -10.0f64..10.0) {
        let v = Nonlinearity::kerr();
        let (z, w) = (Complex64::new(zr, zi), Complex64::new(wr, wi));
        let a = pointwise_splitting_ratio(&v, z, w).unwrap();
        let b = pointwise_splitting_ratio(&v, w, z).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        // |(|z+w|⁴ - |z|⁴ - |w|⁴)/4| ≤ 2(|z|+|w|)²|z||w|
        prop_assert!(a <= 1.0);
    }
}
