//! Diffraction measures `μ` and nonlinear potentials `V`.
//!
//! A measure is always a finite list of atoms `(r_j, w_j)`. Continuous
//! measures enter through [`DiffractionMeasure::from_profile`], the
//! push-forward of the uniform distribution on one period `[0, L]` under
//! `D(s) = ∫₀ˢ d₀`, integrated with Gauss–Legendre nodes per segment.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Atoms closer than this are merged.
const MERGE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffractionMeasure {
    atoms: Vec<(f64, f64)>,
    total_mass: f64,
    support_bound: f64,
}

impl DiffractionMeasure {
    /// Atoms `(r_j, w_j)`; weights must be nonnegative with positive total.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyProfile);
        }
        for &(r, w) in &atoms {
            if !r.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidProfile(format!("atom ({r}, {w})")));
            }
        }
        let total_mass = crate::sum::sum(atoms.iter().map(|a| a.1));
        if !(total_mass > 0.0) {
            return Err(Error::InvalidProfile(format!("total mass {total_mass}")));
        }
        let support_bound = atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
        Ok(DiffractionMeasure { atoms, total_mass, support_bound })
    }

    /// `μ = δ₀`, the discrete NLS case.
    pub fn dirac() -> Self {
        DiffractionMeasure { atoms: alloc::vec![(0.0, 1.0)], total_mass: 1.0, support_bound: 0.0 }
    }

    /// Uniform probability on `[a, b]` with `n` Gauss–Legendre atoms.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n == 0 {
            return Err(Error::InvalidProfile(format!("uniform on [{a}, {b}] with {n} nodes")));
        }
        let (x, w) = gauss_legendre(n);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        Self::new(x.iter().zip(&w).map(|(x, w)| (mid + half * x, w / 2.0)).collect())
    }

    /// The model case `d₀ = +1` on `[0, 1)`, `-1` on `[1, 2)`: uniform on `[0, 1]`.
    pub fn model(n_quad: usize) -> Result<Self> {
        Self::from_profile(&PiecewiseProfile::model(), n_quad)
    }

    /// Push-forward of the uniform distribution on `[0, L]` under `D`.
    pub fn from_profile(profile: &PiecewiseProfile, n_quad: usize) -> Result<Self> {
        if n_quad == 0 {
            return Err(Error::invalid("n_quad must be at least 1"));
        }
        let (x, w) = gauss_legendre(n_quad);
        let mut atoms = Vec::with_capacity(profile.segments.len() * n_quad);
        let mut d_start = 0.0;
        for &(len, value) in &profile.segments {
            for (x, w) in x.iter().zip(&w) {
                let local = len / 2.0 * (1.0 + x);
                atoms.push((d_start + value * local, len / 2.0 * w / profile.period));
            }
            d_start += value * len;
        }
        let mut atoms = merge_atoms(atoms);
        // the rule integrates constants exactly up to rounding; make the mass exactly 1
        let total = crate::sum::sum(atoms.iter().map(|a| a.1));
        for a in atoms.iter_mut() {
            a.1 /= total;
        }
        let mut m = Self::new(atoms)?;
        // B from the segment endpoints of D
        m.support_bound = profile.breakpoint_values().iter().map(|d| d.abs()).fold(0.0, f64::max);
        Ok(m)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.0).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.1).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn support_bound(&self) -> f64 {
        self.support_bound
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `∫ r^k μ(dr)`.
    pub fn moment(&self, k: u32) -> f64 {
        crate::sum::sum(self.atoms.iter().map(|&(r, w)| w * r.powi(k as i32)))
    }
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (r, w) in atoms {
        match out.last_mut() {
            Some(last) if (r - last.0).abs() < MERGE_TOL => last.1 += w,
            _ => out.push((r, w)),
        }
    }
    out
}

/// Piecewise-constant `d₀` over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseProfile {
    period: f64,
    segments: Vec<(f64, f64)>,
    mean_zero: bool,
}

impl PiecewiseProfile {
    /// `segments` are `(length, value)` pairs whose lengths sum to `period`.
    pub fn new(period: f64, segments: Vec<(f64, f64)>, mean_zero: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidProfile(format!("period {period}")));
        }
        for &(len, value) in &segments {
            if !(len > 0.0) || !len.is_finite() || !value.is_finite() {
                return Err(Error::InvalidProfile(format!("segment ({len}, {value})")));
            }
        }
        let total = crate::sum::sum(segments.iter().map(|s| s.0));
        if (total - period).abs() > 1e-12 * period {
            return Err(Error::InvalidProfile(format!("segment lengths sum to {total}, period is {period}")));
        }
        if mean_zero {
            let mean = crate::sum::sum(segments.iter().map(|s| s.0 * s.1));
            if mean.abs() > 1e-12 {
                return Err(Error::InvalidProfile(format!("profile integral {mean} is not zero")));
            }
        }
        Ok(PiecewiseProfile { period, segments, mean_zero })
    }

    /// `d₀ = +1` on `[0, 1)`, `-1` on `[1, 2)`.
    pub fn model() -> Self {
        PiecewiseProfile { period: 2.0, segments: alloc::vec![(1.0, 1.0), (1.0, -1.0)], mean_zero: true }
    }

    /// `d₀ ≡ 0` on a unit period.
    pub fn zero() -> Self {
        PiecewiseProfile { period: 1.0, segments: alloc::vec![(1.0, 0.0)], mean_zero: true }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// `D` at the segment endpoints `0, s₁, …, L`.
    pub fn breakpoint_values(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0];
        let mut d = 0.0;
        for &(len, value) in &self.segments {
            d += len * value;
            out.push(d);
        }
        out
    }

    /// Segment start points `0, s₁, …` within one period.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len());
        let mut s = 0.0;
        for &(len, _) in &self.segments {
            out.push(s);
            s += len;
        }
        out
    }

    /// `d₀(s)` with period `L`.
    pub fn value_at(&self, s: f64) -> f64 {
        let mut local = s - (s / self.period).floor() * self.period;
        for &(len, value) in &self.segments {
            if local < len {
                return value;
            }
            local -= len;
        }
        self.segments[self.segments.len() - 1].1
    }

    /// `D(s) = ∫₀ˢ d₀`, for any real `s`.
    pub fn integral_at(&self, s: f64) -> f64 {
        let periods = (s / self.period).floor();
        let per_period = crate::sum::sum(self.segments.iter().map(|p| p.0 * p.1));
        let mut local = s - periods * self.period;
        let mut acc = periods * per_period;
        for &(len, value) in &self.segments {
            if local <= len {
                return acc + value * local;
            }
            acc += value * len;
            local -= len;
        }
        acc
    }
}

/// The potential `V` as a power sum `Σ c_j a^{s_j}` or a user-supplied pair.
#[derive(Debug, Clone)]
pub enum Potential {
    PowerSum(Vec<(f64, f64)>),
    /// `value(a) = V(a)` and `derivative(a) = V'(a)` for `a ≥ 0`; `V(0)` must be 0.
    Custom { value: fn(f64) -> f64, derivative: fn(f64) -> f64 },
}

/// `V`, the induced `P(z) = V'(|z|) z/|z|`, and the assumption parameters.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    potential: Potential,
    gamma0: f64,
    gamma1: f64,
    gamma2: f64,
    kappa: Option<f64>,
}

impl Nonlinearity {
    pub fn new(potential: Potential, gamma0: f64, gamma1: f64, gamma2: f64, kappa: Option<f64>) -> Result<Self> {
        let bad = |m: alloc::string::String| Err(Error::InvalidNonlinearity(m));
        if let Potential::PowerSum(terms) = &potential {
            if terms.is_empty() {
                return bad("no terms".into());
            }
            for &(c, s) in terms {
                if !c.is_finite() || !s.is_finite() || s <= 2.0 {
                    return bad(format!("term ({c}, {s}): need finite c and s > 2"));
                }
            }
        }
        if !(gamma1 > 2.0 && gamma1 <= gamma2 && gamma2.is_finite()) {
            return bad(format!("need 2 < gamma1 <= gamma2 < inf, got {gamma1}, {gamma2}"));
        }
        if !(gamma0 > 2.0) || !gamma0.is_finite() {
            return bad(format!("need gamma0 > 2, got {gamma0}"));
        }
        if let Some(k) = kappa {
            if !(2.0..6.0).contains(&k) {
                return bad(format!("need 2 <= kappa < 6, got {k}"));
            }
        }
        Ok(Nonlinearity { potential, gamma0, gamma1, gamma2, kappa })
    }

    /// Power sum with parameters read off the exponents: `γ₁`, `γ₀` the
    /// smallest exponent, `γ₂` the largest, `κ` the smallest exponent when
    /// its coefficient is positive and it is below 6.
    pub fn power_sum(terms: Vec<(f64, f64)>) -> Result<Self> {
        let lowest = terms
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::InvalidNonlinearity("no terms".into()))?;
        let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        let kappa = (lowest.0 > 0.0 && lowest.1 < 6.0).then_some(lowest.1);
        Self::new(Potential::PowerSum(terms), lowest.1, lowest.1, top, kappa)
    }

    /// `V(a) = c a^s`.
    pub fn pure_power(c: f64, s: f64) -> Result<Self> {
        Self::power_sum(alloc::vec![(c, s)])
    }

    /// `V(a) = a⁴/4`, so `P(z) = |z|²z`.
    pub fn kerr() -> Self {
        Self::pure_power(0.25, 4.0).expect("valid Kerr parameters")
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    /// `V(a)`, rejecting negative amplitudes.
    pub fn value(&self, a: f64) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::NegativeAmplitude(a));
        }
        Ok(self.v(a))
    }

    /// `V'(a)`, rejecting negative amplitudes.
    pub fn derivative(&self, a: f64) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::NegativeAmplitude(a));
        }
        Ok(self.dv(a))
    }

    pub(crate) fn v(&self, a: f64) -> f64 {
        match &self.potential {
            Potential::PowerSum(terms) => {
                if a == 0.0 {
                    return 0.0;
                }
                terms.iter().map(|&(c, s)| c * pow_abs(a, s)).sum()
            }
            Potential::Custom { value, .. } => value(a),
        }
    }

    pub(crate) fn dv(&self, a: f64) -> f64 {
        match &self.potential {
            Potential::PowerSum(terms) => {
                if a == 0.0 {
                    return 0.0;
                }
                terms.iter().map(|&(c, s)| c * s * pow_abs(a, s - 1.0)).sum()
            }
            Potential::Custom { derivative, .. } => derivative(a),
        }
    }

    /// `p(a) = V'(a)/a`, with `p(0)` the limit for power sums and 0 otherwise.
    pub fn phase_rate(&self, a: f64) -> f64 {
        match &self.potential {
            Potential::PowerSum(terms) => {
                if a == 0.0 {
                    return 0.0;
                }
                terms.iter().map(|&(c, s)| c * s * pow_abs(a, s - 2.0)).sum()
            }
            Potential::Custom { derivative, .. } => {
                if a == 0.0 {
                    0.0
                } else {
                    derivative(a) / a
                }
            }
        }
    }

    /// `V(|z|)` from `|z|²`, avoiding the square root for even exponents.
    #[inline]
    pub(crate) fn v_from_sq(&self, a2: f64) -> f64 {
        match &self.potential {
            Potential::PowerSum(terms) => {
                if a2 == 0.0 {
                    return 0.0;
                }
                terms.iter().map(|&(c, s)| c * pow_sq(a2, s / 2.0)).sum()
            }
            Potential::Custom { value, .. } => value(a2.sqrt()),
        }
    }

    /// `P(z) = p(|z|) z`, with `P(0) = 0`.
    #[inline]
    pub fn p(&self, z: Complex64) -> Complex64 {
        let a2 = z.norm_sqr();
        if a2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let rate = match &self.potential {
            Potential::PowerSum(terms) => terms.iter().map(|&(c, s)| c * s * pow_sq(a2, s / 2.0 - 1.0)).sum(),
            Potential::Custom { derivative, .. } => {
                let a = a2.sqrt();
                derivative(a) / a
            }
        };
        z * rate
    }

    /// Sample-based report on assumptions A1–A4 and the `γ₀`-scaling
    /// `V(ta) ≥ t^{γ₀} V(a)`.
    pub fn check_assumptions(&self, amplitudes: &[f64], scales: &[f64], a4_window: f64) -> AssumptionReport {
        let mut a1_constant: f64 = 0.0;
        let mut a2_margin = f64::INFINITY;
        let mut a3_positive = false;
        let mut a4_constant: Option<f64> = None;
        let mut scaling_margin = f64::INFINITY;
        for &a in amplitudes.iter().filter(|a| **a > 0.0) {
            let (v, dv) = (self.v(a), self.dv(a));
            let envelope = a.powf(self.gamma1 - 1.0) + a.powf(self.gamma2 - 1.0);
            a1_constant = a1_constant.max(dv.abs() / envelope);
            a2_margin = a2_margin.min(dv * a - self.gamma0 * v);
            a3_positive |= v > 0.0;
            if let Some(k) = self.kappa {
                if a <= a4_window {
                    let c = v / a.powf(k);
                    a4_constant = Some(a4_constant.map_or(c, |m: f64| m.min(c)));
                }
            }
            for &t in scales.iter().filter(|t| **t >= 1.0) {
                let lhs = self.v(t * a);
                let rhs = t.powf(self.gamma0) * v;
                let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
                scaling_margin = scaling_margin.min((lhs - rhs) / scale);
            }
        }
        AssumptionReport {
            a1_constant,
            a2_margin,
            a2_holds: a2_margin >= -1e-12 * a1_constant.max(1.0),
            a3_holds: a3_positive,
            a4_constant,
            scaling_margin,
            scaling_holds: scaling_margin >= -1e-12,
        }
    }
}

/// `|a|^s` with integer powers done by repeated multiplication.
#[inline]
fn pow_abs(a: f64, s: f64) -> f64 {
    if s == s.trunc() && s.abs() < 64.0 {
        a.powi(s as i32)
    } else {
        a.powf(s)
    }
}

/// `(a²)^e` for `e = s/2`; integer `e` avoids `powf`.
#[inline]
fn pow_sq(a2: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() < 64.0 {
        a2.powi(e as i32)
    } else {
        a2.powf(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Smallest `C` with `|V'(a)| ≤ C(a^{γ₁-1} + a^{γ₂-1})` on the grid.
    pub a1_constant: f64,
    /// `min (V'(a)a - γ₀V(a))` over the grid.
    pub a2_margin: f64,
    pub a2_holds: bool,
    /// `V(a) > 0` somewhere on the grid.
    pub a3_holds: bool,
    /// `min V(a)/a^κ` over grid points in `(0, a4_window]`.
    pub a4_constant: Option<f64>,
    /// Relative `min (V(ta) - t^{γ₀}V(a))` over grid pairs.
    pub scaling_margin: f64,
    pub scaling_holds: bool,
}
