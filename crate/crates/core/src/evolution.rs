//! The free discrete Schrödinger group `T_r = e^{irΔ}` on `l²(ℤ)`.
//!
//! `T_r` acts by convolution with the kernel
//! `K_r(n) = ⟨x|T_r|x+n⟩ = Σ_k (ir)^k/k! ⟨0|Δ^k|n⟩`, which is even in `n` and
//! obeys `|K_r(n)| ≤ min(1, e^{4|r|}(4|r|)^{|n|}/|n|!)`. Three routes to the
//! kernel are provided:
//!
//! - [`EvolutionKind::TaylorScaled`]: the series at `r/2^s` followed by `s`
//!   squarings (`K_{2r} = K_r * K_r`);
//! - [`EvolutionKind::ClosedKernel`]: `K_r(n) = e^{-2ir} i^{|n|} J_{|n|}(2r)`
//!   from the Fourier symbol `2cos θ - 2`; accurate in relative terms for
//!   tiny far-off entries, which the series route is not;
//! - [`EvolutionKind::SpectralRing`]: the exact propagator of a periodic ring
//!   large enough that wrap-around stays below tolerance.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::LatticeField;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Iteration cap of the kernel series.
const SERIES_CAP: usize = 400;

/// Documented range of `|r|` over which the kernel routes are validated.
pub const VALIDATED_RANGE: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvolutionKind {
    TaylorScaled,
    ClosedKernel,
    SpectralRing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionMethod {
    pub kind: EvolutionKind,
    /// Target size of dropped series terms and of leaked amplitudes.
    pub series_tolerance: f64,
    /// Fixed margin; `None` sizes it with [`required_margin`].
    pub margin: Option<usize>,
}

impl Default for EvolutionMethod {
    fn default() -> Self {
        EvolutionMethod { kind: EvolutionKind::TaylorScaled, series_tolerance: 1e-15, margin: None }
    }
}

impl EvolutionMethod {
    pub fn with_kind(kind: EvolutionKind) -> Self {
        EvolutionMethod { kind, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.series_tolerance > 0.0) {
            return Err(Error::invalid("series tolerance must be positive"));
        }
        Ok(())
    }

    fn margin_for(&self, r: f64) -> Result<usize> {
        self.validate()?;
        match self.margin {
            None => Ok(required_margin(r, self.series_tolerance)),
            Some(m) => {
                let leakage = kernel_bound(r, m);
                if leakage >= self.series_tolerance && r != 0.0 {
                    Err(Error::InsufficientMargin { margin: m, leakage, tolerance: self.series_tolerance })
                } else {
                    Ok(m)
                }
            }
        }
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `min(1, e^{4|r|}(4|r|)^n/n!)`, the a-priori bound on `|K_r(n)|`.
pub fn kernel_bound(r: f64, n: usize) -> f64 {
    let a = 4.0 * r.abs();
    if a == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let log = a + n as f64 * a.ln() - ln_factorial(n);
    log.exp().min(1.0)
}

/// Smallest `m` with `e^{4|r|}(4|r|)^m/m! < tol`: amplitudes leaked more than
/// `m` sites beyond the support of a field are below `tol`. Gives 1 at `r = 0`
/// (the bound is exactly 1 at `m = 0`).
pub fn required_margin(r: f64, tol: f64) -> usize {
    let a = 4.0 * r.abs();
    if a == 0.0 {
        return if tol > 1.0 { 0 } else { 1 };
    }
    let target = tol.ln();
    let mut log = a; // m = 0
    let mut m = 0usize;
    while log >= target {
        m += 1;
        log += a.ln() - (m as f64).ln();
    }
    m
}

/// Integer-order Bessel functions `J_0(x) … J_{nmax}(x)` by Miller's
/// backward recurrence normalized with `J_0 + 2Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, nmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = (nmax as f64).max(ax);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    start += start % 2;
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        // cur = J_k up to scale, next = J_{k+1}
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for (n, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Kernel entry by the unscaled series `Σ_k (ir)^k/k! ⟨0|Δ^k|n⟩`, summed until
/// the terms drop below `tol`. Loses digits to cancellation once `4|r|` is
/// large; it is the reference the other routes are checked against for
/// moderate `r`.
pub fn kernel_series(r: f64, n: i64, tol: f64) -> Result<Complex64> {
    let n = n.unsigned_abs() as usize;
    // Δ^k δ₀ is supported on [-k, k]; store it on a window that grows.
    let mut term = vec![ONE];
    let mut acc = if n == 0 { ONE } else { ZERO };
    for k in 1..=SERIES_CAP {
        let mut next = vec![ZERO; 2 * k + 1];
        let factor = Complex64::new(0.0, r / k as f64);
        for (i, v) in next.iter_mut().enumerate() {
            // index i ↔ site i - k; previous term lives on [-(k-1), k-1]
            let site = i as i64 - k as i64;
            let get = |s: i64| -> Complex64 {
                let j = s + (k as i64 - 1);
                if j >= 0 && (j as usize) < term.len() {
                    term[j as usize]
                } else {
                    ZERO
                }
            };
            *v = factor * (get(site + 1) - 2.0 * get(site) + get(site - 1));
        }
        term = next;
        if n <= k {
            acc += term[k + n];
        }
        let size = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if k >= n && size < tol {
            return Ok(acc);
        }
        if r == 0.0 {
            return Ok(acc);
        }
    }
    Err(Error::SeriesNonconvergence { tolerance: tol, iterations: SERIES_CAP })
}

fn width_tolerance(tol: f64) -> f64 {
    tol.min(1e-18) * 1e-2
}

fn taylor_scaled_row(r: f64, width: usize, tol: f64) -> Result<Vec<Complex64>> {
    let mut s = 0u32;
    while 4.0 * r.abs() / f64::powi(2.0, s as i32) > 0.5 {
        s += 1;
    }
    let r0 = r / f64::powi(2.0, s as i32);
    let wtol = width_tolerance(tol);
    let base_width = required_margin(r0, wtol).max(if s == 0 { width } else { 0 });
    let mut row: Vec<Complex64> = Vec::with_capacity(base_width + 1);
    for n in 0..=base_width {
        row.push(kernel_series(r0, n as i64, tol * 1e-3)?);
    }
    for k in 1..=s {
        let rk = r0 * f64::powi(2.0, k as i32);
        let target = if k == s { width } else { required_margin(rk, wtol) };
        let w = row.len() - 1;
        let get = |m: i64| -> Complex64 {
            let a = m.unsigned_abs() as usize;
            if a <= w {
                row[a]
            } else {
                ZERO
            }
        };
        let new_row: Vec<Complex64> = (0..=target as i64)
            .map(|n| {
                let lo = (n - w as i64).max(-(w as i64));
                let hi = (n + w as i64).min(w as i64);
                let mut acc = ZERO;
                for m in lo..=hi {
                    acc += get(m) * get(n - m);
                }
                acc
            })
            .collect();
        row = new_row;
    }
    row.resize(width + 1, ZERO);
    Ok(row)
}

fn closed_row(r: f64, width: usize) -> Vec<Complex64> {
    let j = bessel_j_sequence(2.0 * r, width);
    let phase = Complex64::new(0.0, -2.0 * r).exp();
    j.iter().enumerate().map(|(n, &jn)| phase * i_pow(n) * jn).collect()
}

/// Kernel of the propagator on the periodic ring `ℤ/Nℤ`, entries `0..=N/2`.
pub fn ring_kernel(r: f64, ring: usize) -> Vec<Complex64> {
    let half = ring / 2;
    let symbol: Vec<Complex64> = (0..ring)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / ring as f64;
            Complex64::new(0.0, r * (2.0 * theta.cos() - 2.0)).exp()
        })
        .collect();
    (0..=half)
        .map(|n| {
            let mut acc = ZERO;
            for (k, s) in symbol.iter().enumerate() {
                // reduce k·n mod N before forming the angle
                let kn = (k * n) % ring;
                acc += s * (2.0 * PI * kn as f64 / ring as f64).cos();
            }
            acc / ring as f64
        })
        .collect()
}

fn spectral_row(r: f64, width: usize, tol: f64) -> Vec<Complex64> {
    // ring large enough that images at distance ≥ ring - width are below tol
    let ring = 2 * width + required_margin(r, width_tolerance(tol)) + 1;
    let mut row = ring_kernel(r, ring);
    row.truncate(width + 1);
    row.resize(width + 1, ZERO);
    row
}

/// `K_r(0..=width)` by the requested route.
pub fn kernel_row(r: f64, width: usize, method: &EvolutionMethod) -> Result<Vec<Complex64>> {
    method.validate()?;
    match method.kind {
        EvolutionKind::TaylorScaled => taylor_scaled_row(r, width, method.series_tolerance),
        EvolutionKind::ClosedKernel => Ok(closed_row(r, width)),
        EvolutionKind::SpectralRing => Ok(spectral_row(r, width, method.series_tolerance)),
    }
}

/// `⟨x|T_r|y⟩` for `n = x - y`.
pub fn kernel_entry(r: f64, n: i64, method: &EvolutionMethod) -> Result<Complex64> {
    let n = n.unsigned_abs() as usize;
    Ok(kernel_row(r, n, method)?[n])
}

/// Convolution of a box field with an even kernel row, onto radius `out_radius`.
fn convolve(row: &[Complex64], f: &LatticeField, out_radius: usize) -> LatticeField {
    let w = row.len() as i64 - 1;
    let m = f.radius() as i64;
    let vals = f.values();
    LatticeField::from_fn(out_radius, |x| {
        let lo = (x - w).max(-m);
        let hi = (x + w).min(m);
        let mut acc = ZERO;
        for y in lo..=hi {
            acc += row[(x - y).unsigned_abs() as usize] * vals[(y + m) as usize];
        }
        acc
    })
}

fn conj_convolve(row: &[Complex64], h: &LatticeField, out_radius: usize) -> LatticeField {
    let w = row.len() as i64 - 1;
    let m = h.radius() as i64;
    let vals = h.values();
    LatticeField::from_fn(out_radius, |y| {
        let lo = (y - w).max(-m);
        let hi = (y + w).min(m);
        let mut acc = ZERO;
        for x in lo..=hi {
            acc += row[(x - y).unsigned_abs() as usize].conj() * vals[(x + m) as usize];
        }
        acc
    })
}

/// `T_r f` on a box grown by the margin. The margin is
/// `method.margin` when set (checked against the kernel bound), otherwise
/// [`required_margin`]`(r, series_tolerance)`.
pub fn apply_evolution(r: f64, f: &LatticeField, method: &EvolutionMethod) -> Result<LatticeField> {
    if r == 0.0 {
        return Ok(f.clone());
    }
    let margin = method.margin_for(r)?;
    let out_radius = f.radius() + margin;
    match method.kind {
        EvolutionKind::SpectralRing => {
            let ring = 2 * out_radius + 1;
            let wrap = kernel_bound(r, ring - 2 * f.radius());
            if wrap >= method.series_tolerance {
                return Err(Error::InsufficientMargin {
                    margin,
                    leakage: wrap,
                    tolerance: method.series_tolerance,
                });
            }
            let row = ring_kernel(r, ring);
            let n = ring as i64;
            let m = f.radius() as i64;
            let vals = f.values();
            Ok(LatticeField::from_fn(out_radius, |x| {
                let mut acc = ZERO;
                for y in -m..=m {
                    let d = (x - y).rem_euclid(n);
                    let d = d.min(n - d) as usize;
                    acc += row[d] * vals[(y + m) as usize];
                }
                acc
            }))
        }
        _ => {
            let row = kernel_row(r, margin, method)?;
            Ok(convolve(&row, f, out_radius))
        }
    }
}

/// Kernel rows cached per atom `r_j` for fields on a fixed box.
///
/// `forward(j, f)` maps a field on `[-M, M]` to `T_{r_j} f` on
/// `[-M-m, M+m]`; `adjoint(j, h)` maps back with `T_{-r_j}` and restricts to
/// `[-M, M]`. The pair is exactly adjoint, so derivatives computed with it
/// are derivatives of the truncated functional.
#[derive(Debug, Clone)]
pub struct Propagator {
    radius: usize,
    margin: usize,
    nodes: Vec<f64>,
    rows: Vec<Vec<Complex64>>,
}

impl Propagator {
    pub fn new(nodes: &[f64], radius: usize, method: &EvolutionMethod) -> Result<Self> {
        // each row is cut at its own margin; the output box uses the largest
        let mut margin = 0;
        let mut rows = Vec::with_capacity(nodes.len());
        for &r in nodes {
            let m = method.margin_for(r)?;
            margin = margin.max(m);
            rows.push(if r == 0.0 { alloc::vec![ONE] } else { kernel_row(r, m, method)? });
        }
        Ok(Propagator { radius, margin, nodes: nodes.to_vec(), rows })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn ext_radius(&self) -> usize {
        self.radius + self.margin
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.rows[j]
    }

    /// `T_{r_j} f` on the extended box.
    pub fn forward(&self, j: usize, f: &LatticeField) -> LatticeField {
        debug_assert!(f.radius() <= self.radius);
        convolve(&self.rows[j], f, self.ext_radius())
    }

    /// `T_{-r_j} h` restricted to the base box.
    pub fn adjoint(&self, j: usize, h: &LatticeField) -> LatticeField {
        conj_convolve(&self.rows[j], h, self.radius)
    }
}

/// Exact propagator of the periodic ring `ℤ/Nℤ`, used by the time
/// integrators where isometry per step matters.
#[derive(Debug, Clone)]
pub struct RingPropagator {
    ring: usize,
    row: Vec<Complex64>,
}

impl RingPropagator {
    pub fn new(r: f64, ring: usize) -> Self {
        RingPropagator { ring, row: ring_kernel(r, ring) }
    }

    pub fn ring(&self) -> usize {
        self.ring
    }

    /// Applies the circulant to `values` (index 0 ↔ first ring site).
    pub fn apply(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.ring;
        assert_eq!(values.len(), n);
        let mut out = vec![ZERO; n];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (y, v) in values.iter().enumerate() {
                let d = if x >= y { x - y } else { y - x };
                acc += self.row[d.min(n - d)] * v;
            }
            *o = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn identity_at_zero_time() {
        for kind in [EvolutionKind::TaylorScaled, EvolutionKind::ClosedKernel, EvolutionKind::SpectralRing] {
            let m = EvolutionMethod::with_kind(kind);
            assert!(close(kernel_entry(0.0, 0, &m).unwrap(), ONE, 1e-15));
            for n in 1..6 {
                assert!(kernel_entry(0.0, n, &m).unwrap().norm() < 1e-15);
            }
        }
        let f = LatticeField::from_real(3, |x| x as f64);
        assert_eq!(apply_evolution(0.0, &f, &EvolutionMethod::default()).unwrap(), f);
    }

    #[test]
    fn small_time_leading_term() {
        // K_r(1) = ir⟨x|Δ|x+1⟩ + O(r²) = ir + O(r²)
        let r = 1e-3;
        for kind in [EvolutionKind::TaylorScaled, EvolutionKind::ClosedKernel] {
            let k = kernel_entry(r, 1, &EvolutionMethod::with_kind(kind)).unwrap();
            let ratio = k / Complex64::new(0.0, r);
            assert!((ratio - ONE).norm() < 5e-3, "{kind:?}: {ratio}");
        }
    }

    #[test]
    fn routes_agree_entrywise() {
        let taylor = EvolutionMethod::with_kind(EvolutionKind::TaylorScaled);
        let closed = EvolutionMethod::with_kind(EvolutionKind::ClosedKernel);
        let ring = EvolutionMethod::with_kind(EvolutionKind::SpectralRing);
        for &r in &[-3.7, -1.0, -0.05, 0.2, 0.5, 1.0, 2.5, 7.0, 16.0] {
            let a = kernel_row(r, 40, &taylor).unwrap();
            let b = kernel_row(r, 40, &closed).unwrap();
            let c = kernel_row(r, 40, &ring).unwrap();
            for n in 0..=40 {
                assert!(close(a[n], b[n], 1e-10), "r={r} n={n}: {} vs {}", a[n], b[n]);
                assert!(close(c[n], b[n], 1e-10), "r={r} n={n}: ring {} vs {}", c[n], b[n]);
            }
        }
    }

    #[test]
    fn series_matches_closed_form_at_moderate_times() {
        let closed = EvolutionMethod::with_kind(EvolutionKind::ClosedKernel);
        for &r in &[-1.5, -0.3, 0.1, 0.7, 1.5] {
            for n in 0..12 {
                let s = kernel_series(r, n, 1e-18).unwrap();
                let c = kernel_entry(r, n, &closed).unwrap();
                assert!(close(s, c, 1e-12), "r={r} n={n}");
            }
        }
    }

    #[test]
    fn bessel_reference_values() {
        // J_0(1), J_1(1), J_5(10), J_0(32) (Abramowitz–Stegun tables)
        let j = bessel_j_sequence(1.0, 2);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        let j = bessel_j_sequence(10.0, 5);
        assert!((j[5] - (-0.234_061_528_186_793_7)).abs() < 1e-13);
        let j = bessel_j_sequence(-10.0, 5);
        assert!((j[5] - 0.234_061_528_186_793_7).abs() < 1e-13);
    }

    #[test]
    fn kernel_bound_holds_on_grid() {
        let m = EvolutionMethod::with_kind(EvolutionKind::ClosedKernel);
        for i in 0..=40 {
            let r = -2.0 + 0.1 * i as f64;
            let row = kernel_row(r, 25, &m).unwrap();
            for (n, k) in row.iter().enumerate() {
                assert!(k.norm() <= kernel_bound(r, n) * (1.0 + 1e-12) + 1e-300);
            }
        }
    }

    #[test]
    fn margin_examples() {
        assert_eq!(required_margin(0.0, 1e-13), 1);
        let m = required_margin(1.0, 1e-13);
        let b = |k: usize| 4f64.exp() * 4f64.powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
        assert!(b(m) < 1e-13 && b(m - 1) >= 1e-13, "m = {m}");
        assert!(required_margin(2.0, 1e-13) >= m);
        assert!(required_margin(1.0, 1e-8) <= m);
    }

    #[test]
    fn fixed_margin_is_checked() {
        let f = LatticeField::delta(2, 0, 1.0);
        let method = EvolutionMethod { margin: Some(3), ..Default::default() };
        assert!(matches!(apply_evolution(1.0, &f, &method), Err(Error::InsufficientMargin { .. })));
    }

    #[test]
    fn propagator_pair_is_adjoint() {
        let method = EvolutionMethod::default();
        let p = Propagator::new(&[0.0, 0.3, -0.8], 6, &method).unwrap();
        let f = LatticeField::from_fn(6, |x| Complex64::new((x as f64).sin(), 0.1 * x as f64));
        let h = LatticeField::from_fn(p.ext_radius(), |x| Complex64::new((0.3 * x as f64).cos(), 0.05));
        for j in 0..3 {
            let lhs = h.inner(&p.forward(j, &f));
            let rhs = p.adjoint(j, &h).inner(&f);
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn ring_propagator_is_unitary() {
        let rp = RingPropagator::new(0.9, 33);
        let v: Vec<Complex64> = (0..33).map(|i| Complex64::new((i as f64).cos(), 0.2 * i as f64 / 33.0)).collect();
        let w = rp.apply(&v);
        let n0: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let n1: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        assert!((n0 - n1).abs() < 1e-13 * n0);
    }
}
