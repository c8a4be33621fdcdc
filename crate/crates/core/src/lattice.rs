//! Complex fields on a truncated box `[-M, M] ⊂ ℤ` and the elementary
//! difference operators.
//!
//! Sites outside the stored box are zero. Operators with a stencil grow the
//! box instead of clipping, so no mass is ever silently dropped; callers
//! truncate explicitly with [`LatticeField::resized`].

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::sum::{Accumulator, ComplexAccumulator};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Box size and the amplitude below which truncation is accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPolicy {
    pub box_radius: usize,
    pub tail_floor: f64,
}

impl BoxPolicy {
    pub fn new(box_radius: usize, tail_floor: f64) -> Result<Self> {
        if box_radius < 1 {
            return Err(Error::invalid("box radius must be at least 1"));
        }
        if !(tail_floor > 0.0) {
            return Err(Error::invalid("tail floor must be positive"));
        }
        Ok(BoxPolicy { box_radius, tail_floor })
    }
}

impl Default for BoxPolicy {
    fn default() -> Self {
        BoxPolicy { box_radius: 40, tail_floor: 1e-13 }
    }
}

/// Finite-support complex sequence stored densely on `[-radius, radius]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    radius: usize,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn zeros(radius: usize) -> Self {
        LatticeField { radius, values: vec![ZERO; 2 * radius + 1] }
    }

    /// Wraps `values` (site `-radius` first). Rejects wrong lengths and
    /// non-finite entries.
    pub fn from_values(radius: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * radius + 1 {
            return Err(Error::invalid("value count does not match 2*radius + 1"));
        }
        if let Some(i) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { site: i as i64 - radius as i64 });
        }
        Ok(LatticeField { radius, values })
    }

    pub fn from_fn(radius: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let r = radius as i64;
        LatticeField { radius, values: (-r..=r).map(&mut f).collect() }
    }

    pub fn from_real(radius: usize, mut f: impl FnMut(i64) -> f64) -> Self {
        Self::from_fn(radius, |x| Complex64::new(f(x), 0.0))
    }

    /// `amplitude · δ_site` on a box of the given radius.
    pub fn delta(radius: usize, site: i64, amplitude: f64) -> Self {
        let mut f = Self::zeros(radius);
        f.set(site, Complex64::new(amplitude, 0.0));
        f
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Mutable access to the stored amplitudes. Callers keep them finite.
    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Site range `-radius..=radius`.
    pub fn sites(&self) -> core::ops::RangeInclusive<i64> {
        let r = self.radius as i64;
        -r..=r
    }

    #[inline]
    fn index(&self, x: i64) -> Option<usize> {
        let i = x + self.radius as i64;
        if i >= 0 && (i as usize) < self.values.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Amplitude at `x`; zero outside the box.
    #[inline]
    pub fn get(&self, x: i64) -> Complex64 {
        self.index(x).map_or(ZERO, |i| self.values[i])
    }

    /// Sets the amplitude at `x`. Panics when `x` lies outside the box.
    pub fn set(&mut self, x: i64, z: Complex64) {
        let i = self.index(x).expect("site outside the box");
        self.values[i] = z;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Same field on a box of radius `radius`: zero padding when growing,
    /// dropping the outer sites when shrinking.
    pub fn resized(&self, radius: usize) -> Self {
        Self::from_fn(radius, |x| self.get(x))
    }

    /// Largest amplitude outside `[-radius, radius]`.
    pub fn max_outside(&self, radius: usize) -> f64 {
        let r = radius as i64;
        self.sites()
            .filter(|x| x.abs() > r)
            .map(|x| self.get(x).norm())
            .fold(0.0, f64::max)
    }

    /// `max(|f(-M)|, |f(M)|)`.
    pub fn edge_amplitude(&self) -> f64 {
        let r = self.radius as i64;
        self.get(-r).norm().max(self.get(r).norm())
    }

    /// `x ↦ f(x - k)` on the same box; amplitudes pushed out are dropped.
    pub fn shifted(&self, k: i64) -> Self {
        Self::from_fn(self.radius, |x| self.get(x - k))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        LatticeField { radius: self.radius, values: self.values.iter().map(|z| z * c).collect() }
    }

    pub fn scaled_real(&self, c: f64) -> Self {
        self.scaled(Complex64::new(c, 0.0))
    }

    pub fn conj(&self) -> Self {
        LatticeField { radius: self.radius, values: self.values.iter().map(|z| z.conj()).collect() }
    }

    /// `self + c·other` on the larger of the two boxes.
    pub fn add_scaled(&self, c: Complex64, other: &LatticeField) -> Self {
        let radius = self.radius.max(other.radius);
        Self::from_fn(radius, |x| self.get(x) + c * other.get(x))
    }

    pub fn add(&self, other: &LatticeField) -> Self {
        self.add_scaled(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &LatticeField) -> Self {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &LatticeField) -> Self {
        let radius = self.radius.min(other.radius);
        Self::from_fn(radius, |x| self.get(x) * other.get(x))
    }

    /// Pointwise map of the amplitudes.
    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        LatticeField { radius: self.radius, values: self.values.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise moduli as a real vector.
    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// `⟨f, g⟩ = Σ conj(f(x)) g(x)`, conjugate-linear in `self`.
    pub fn inner(&self, other: &LatticeField) -> Complex64 {
        let r = self.radius.min(other.radius) as i64;
        let mut acc = ComplexAccumulator::new();
        for x in -r..=r {
            acc.add(self.get(x).conj() * other.get(x));
        }
        acc.value()
    }

    /// `Re⟨f, g⟩`, the real inner product on `ℂ^n ≅ ℝ^{2n}`.
    pub fn re_inner(&self, other: &LatticeField) -> f64 {
        let r = self.radius.min(other.radius) as i64;
        let mut acc = Accumulator::new();
        for x in -r..=r {
            let (a, b) = (self.get(x), other.get(x));
            acc.add(a.re * b.re);
            acc.add(a.im * b.im);
        }
        acc.value()
    }

    /// `‖f‖₂²`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).collect::<Accumulator>().value()
    }

    pub fn norm2(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ |f(x)|^p` for finite `p ≥ 1`.
    pub fn norm_pow(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        Ok(self.values.iter().map(|z| z.norm().powf(p)).collect::<Accumulator>().value())
    }

    /// `‖f‖_p` for `1 ≤ p ≤ ∞` (`f64::INFINITY` selects the sup norm).
    pub fn norm_p(&self, p: f64) -> Result<f64> {
        if p == f64::INFINITY {
            return Ok(self.norm_inf());
        }
        if p == 2.0 {
            return Ok(self.norm2());
        }
        Ok(self.norm_pow(p)?.powf(1.0 / p))
    }

    /// `(Δf)(x) = f(x+1) - 2f(x) + f(x-1)`; the box grows by one site.
    pub fn laplacian(&self) -> Self {
        Self::from_fn(self.radius + 1, |x| self.get(x + 1) - 2.0 * self.get(x) + self.get(x - 1))
    }

    /// `(Δf)` restricted to the input box.
    pub fn laplacian_in_box(&self) -> Self {
        Self::from_fn(self.radius, |x| self.get(x + 1) - 2.0 * self.get(x) + self.get(x - 1))
    }

    /// `(D₊f)(x) = f(x+1) - f(x)`; the box grows by one site.
    pub fn forward_diff(&self) -> Self {
        Self::from_fn(self.radius + 1, |x| self.get(x + 1) - self.get(x))
    }

    /// `(D₋f)(x) = f(x) - f(x-1)`; the box grows by one site.
    pub fn backward_diff(&self) -> Self {
        Self::from_fn(self.radius + 1, |x| self.get(x) - self.get(x - 1))
    }

    /// `‖D₊f‖₂² = ⟨f, -Δf⟩` including the two boundary bonds.
    pub fn dirichlet_energy(&self) -> f64 {
        let r = self.radius as i64;
        let mut acc = Accumulator::new();
        for x in -r - 1..=r {
            acc.add((self.get(x + 1) - self.get(x)).norm_sqr());
        }
        acc.value()
    }

    /// Site of the largest amplitude (the leftmost one on ties).
    pub fn peak_site(&self) -> i64 {
        let mut best = (0usize, -1.0);
        for (i, z) in self.values.iter().enumerate() {
            let a = z.norm_sqr();
            if a > best.1 {
                best = (i, a);
            }
        }
        best.0 as i64 - self.radius as i64
    }
}

/// The profile `f(x) = A e^{-ν|x|}` together with its closed-form norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpProfile {
    pub amplitude: f64,
    pub rate: f64,
}

impl ExpProfile {
    pub fn new(amplitude: f64, rate: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !(rate > 0.0) {
            return Err(Error::invalid("exp profile needs A > 0 and nu > 0"));
        }
        Ok(ExpProfile { amplitude, rate })
    }

    /// The profile sampled on `[-radius, radius]`, without any tail check.
    pub fn field(&self, radius: usize) -> LatticeField {
        LatticeField::from_real(radius, |x| self.amplitude * (-self.rate * x.abs() as f64).exp())
    }

    /// Largest amplitude dropped by truncating at `radius`.
    pub fn truncation_amplitude(&self, radius: usize) -> f64 {
        self.amplitude * (-self.rate * (radius as f64 + 1.0)).exp()
    }

    /// `‖f‖_κ^κ = A^κ cosh(κν/2)/sinh(κν/2)` on the whole lattice.
    pub fn norm_pow_closed(&self, kappa: f64) -> f64 {
        let t = 0.5 * kappa * self.rate;
        self.amplitude.powf(kappa) * t.cosh() / t.sinh()
    }

    /// `‖D₊f‖₂² = ⟨f, -Δf⟩ = 4A² sinh²(ν/2)/sinh(ν)` on the whole lattice.
    pub fn dirichlet_energy_closed(&self) -> f64 {
        let s = (0.5 * self.rate).sinh();
        4.0 * self.amplitude * self.amplitude * s * s / self.rate.sinh()
    }

    /// Amplitude giving `‖f‖₂² = λ` on the whole lattice.
    pub fn amplitude_for_power(lambda: f64, rate: f64) -> f64 {
        (lambda * rate.tanh()).sqrt()
    }
}

/// `A e^{-ν|x|}` on `[-M, M]`; fails when the dropped tail `A e^{-ν(M+1)}`
/// exceeds `tail_floor`.
pub fn exp_profile(amplitude: f64, rate: f64, policy: BoxPolicy) -> Result<LatticeField> {
    let p = ExpProfile::new(amplitude, rate)?;
    let dropped = p.truncation_amplitude(policy.box_radius);
    if dropped > policy.tail_floor {
        return Err(Error::Truncation { amplitude: dropped, floor: policy.tail_floor });
    }
    Ok(p.field(policy.box_radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn laplacian_of_delta() {
        let d = LatticeField::delta(0, 0, 1.0);
        let l = d.laplacian();
        assert_eq!(l.radius(), 1);
        assert_eq!(l.values(), &[c(1.0), c(-2.0), c(1.0)]);
        assert_eq!(d.inner(&l.scaled_real(-1.0)).re, 2.0);
    }

    #[test]
    fn forward_diff_of_delta_and_block() {
        let d = LatticeField::delta(3, 0, 1.0);
        assert_eq!(d.forward_diff().norm_sq(), 2.0);
        let block = LatticeField::from_real(5, |_| 1.0);
        let dp = block.forward_diff();
        for x in -5..5 {
            assert_eq!(dp.get(x), c(0.0));
        }
        // D₋g(x+1) = D₊g(x)
        let g = LatticeField::from_real(4, |x| (x * x) as f64 - 0.3 * x as f64);
        let (fp, bm) = (g.forward_diff(), g.backward_diff());
        for x in -5..5 {
            assert_eq!(bm.get(x + 1), fp.get(x));
        }
    }

    #[test]
    fn delta_norms_are_one() {
        let d = LatticeField::delta(2, 1, 1.0);
        for p in [1.0, 1.5, 2.0, 3.0, 7.0, f64::INFINITY] {
            assert_eq!(d.norm_p(p).unwrap(), 1.0);
        }
        assert!(matches!(d.norm_p(0.5), Err(Error::InvalidExponent(_))));
        assert!(d.norm_p(f64::NAN).is_err());
    }

    #[test]
    fn exp_profile_ln2_spot_values() {
        // direct summation oracle: Σ 4^{-|x|} = 5/3, Σ 16^{-|x|} = 17/15,
        // Σ |D₊f|² = 2·Σ_{k≥1} 4^{-k} = 2/3
        let f = exp_profile(1.0, LN_2, BoxPolicy::new(80, 1e-13).unwrap()).unwrap();
        assert!((f.norm_sq() - 5.0 / 3.0).abs() < 1e-14);
        assert!((f.norm_pow(4.0).unwrap() - 17.0 / 15.0).abs() < 1e-14);
        assert!((f.dirichlet_energy() - 2.0 / 3.0).abs() < 1e-14);
        assert!((f.forward_diff().norm_sq() - 2.0 / 3.0).abs() < 1e-14);
        let p = ExpProfile::new(1.0, LN_2).unwrap();
        assert!((p.norm_pow_closed(2.0) - 5.0 / 3.0).abs() < 1e-14);
        assert!((p.norm_pow_closed(4.0) - 17.0 / 15.0).abs() < 1e-14);
        assert!((p.dirichlet_energy_closed() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exp_profile_rejects_short_box() {
        let err = exp_profile(1.0, 0.1, BoxPolicy::new(10, 1e-13).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn from_values_checks_invariants() {
        assert!(LatticeField::from_values(1, alloc::vec![c(0.0); 2]).is_err());
        let bad = alloc::vec![c(0.0), Complex64::new(f64::NAN, 0.0), c(0.0)];
        assert_eq!(LatticeField::from_values(1, bad), Err(Error::NonFinite { site: 0 }));
    }

    #[test]
    fn shift_and_resize() {
        let f = LatticeField::from_real(3, |x| x as f64);
        let g = f.shifted(1);
        assert_eq!(g.get(3), c(2.0));
        assert_eq!(g.get(-3), c(0.0));
        let h = f.resized(5);
        assert_eq!(h.get(5), c(0.0));
        assert_eq!(h.get(3), c(3.0));
        assert_eq!(f.resized(1).radius(), 1);
        assert_eq!(f.max_outside(2), 3.0);
    }
}
