use core::f64::consts::PI;

use dmsol_core::evolution::{apply_evolution, kernel_bound, kernel_entry, kernel_series, required_margin, ring_kernel, EvolutionKind, EvolutionMethod};
use dmsol_core::lattice::LatticeField;
use dmsol_core::random::{random_field, rng};
use dmsol_core::Complex64;
use proptest::prelude::*;

/// `J_n(x) = (1/π) ∫₀^π cos(nτ - x sin τ) dτ` by the trapezoid rule, which is
/// spectrally accurate for this periodic integrand.
fn bessel_j(n: i64, x: f64) -> f64 {
    let m = 2048;
    let h = PI / m as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for k in 1..m {
        s += f(k as f64 * h);
    }
    s * h / PI
}

/// `⟨0|e^{irΔ}|n⟩ = e^{-2ir} iⁿ J_n(2r)`.
fn kernel_oracle(r: f64, n: i64) -> Complex64 {
    let i_n = Complex64::new(0.0, 1.0).powi(n.rem_euclid(4) as i32);
    Complex64::new(0.0, -2.0 * r).exp() * i_n * bessel_j(n, 2.0 * r)
}

fn methods() -> [EvolutionMethod; 3] {
    [
        EvolutionMethod::with_kind(EvolutionKind::TaylorScaled),
        EvolutionMethod::with_kind(EvolutionKind::ClosedKernel),
        EvolutionMethod::with_kind(EvolutionKind::SpectralRing),
    ]
}

#[test]
fn kernel_entries_match_bessel_oracle() {
    for r in [-2.5, -0.7, 0.1, 0.9, 3.0] {
        for n in -12..=12 {
            let want = kernel_oracle(r, n);
            for m in methods() {
                let got = kernel_entry(r, n, &m).unwrap();
                assert!((got - want).norm() < 1e-13, "{:?} r {r} n {n}: {got} vs {want}", m.kind);
            }
            let series = kernel_series(r, n, 1e-17).unwrap();
            assert!((series - want).norm() < 1e-12, "series r {r} n {n}");
        }
    }
}

#[test]
fn ring_kernel_matches_lattice_kernel_on_wide_ring() {
    let r = 1.3;
    let row = ring_kernel(r, 101);
    for (n, z) in row.iter().enumerate().take(20) {
        assert!((z - kernel_oracle(r, n as i64)).norm() < 1e-13);
    }
}

#[test]
fn kernel_bound_dominates() {
    for r in [0.2, 1.0, 2.5] {
        for n in 0..40 {
            assert!(kernel_oracle(r, n as i64).norm() <= kernel_bound(r, n) * (1.0 + 1e-12) + 1e-15);
        }
    }
}

#[test]
fn required_margin_is_smallest() {
    for r in [0.0, 0.3, 1.0, 4.0] {
        let m = required_margin(r, 1e-15);
        assert!(kernel_bound(r, m) < 1e-15);
        if m > 1 {
            assert!(kernel_bound(r, m - 1) >= 1e-15);
        }
    }
}

fn field(seed: u64) -> LatticeField {
    random_field(&mut rng(seed), 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_is_unitary(seed in any::<u64>(), r in -4.0f64..4.0, k in 0usize..3) {
        let f = field(seed);
        let g = apply_evolution(r, &f, &methods()[k]).unwrap();
        prop_assert!((g.norm_sq() - f.norm_sq()).abs() <= 1e-12 * f.norm_sq());
    }

    #[test]
    fn group_law(seed in any::<u64>(), r in -2.0f64..2.0, s in -2.0f64..2.0) {
        let f = field(seed);
        let m = EvolutionMethod::default();
        let two = apply_evolution(s, &apply_evolution(r, &f, &m).unwrap(), &m).unwrap();
        let one = apply_evolution(r + s, &f, &m).unwrap();
        let gap = two.sub(&one).norm2();
        prop_assert!(gap <= 1e-12 * f.norm2(), "{gap}");
    }

    #[test]
    fn inverse_undoes(seed in any::<u64>(), r in -3.0f64..3.0) {
        let f = field(seed);
        let m = EvolutionMethod::default();
        let back = apply_evolution(-r, &apply_evolution(r, &f, &m).unwrap(), &m).unwrap();
        prop_assert!(back.sub(&f).norm2() <= 1e-12 * f.norm2());
    }

    #[test]
    fn commutes_with_shift(seed in any::<u64>(), r in -2.0f64..2.0, k in -3i64..3) {
        let f = field(seed).resized(12);
        let m = EvolutionMethod::default();
        let a = apply_evolution(r, &f.shifted(k), &m).unwrap();
        let b = apply_evolution(r, &f, &m).unwrap().shifted(k);
        prop_assert!(a.sub(&b).norm2() <= 1e-12 * f.norm2());
    }
}
