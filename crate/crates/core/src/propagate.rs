//! Time integration of the averaged equation
//!
//! ```text
//!     i ∂_t v = -d_av Δv - ∫ T_r^{-1}[ P(T_r v) ] μ(dr)
//! ```
//!
//! and of the original equation `i ∂_t u = -d(t) Δu - P(u)` with
//! `d(t) = ε⁻¹ d₀(t/ε) + d_av`, both on a box `[-M, M]` with zero Dirichlet
//! data outside.
//!
//! The linear flow `e^{iρΔ}` of the box Laplacian is applied exactly in its
//! sine eigenbasis, so every linear substep is an isometry. With the sign
//! conventions of [`crate::energy`], a solution `φ` with multiplier `ω`
//! evolves as `v(t) = e^{-iωt} φ`, and `u(t) ≈ T_{D(t/ε)} v(t)` for small `ε`
//! with `D(s) = ∫₀ˢ d₀`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::energy::{Functional, Problem};
use crate::lattice::LatticeField;
use crate::profile::{Nonlinearity, PiecewiseProfile};
use crate::{Complex64, Error, Result};

/// Largest accepted relative change of `‖v‖₂` in one step.
pub const MAX_STEP_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Half linear flow, nonlinear substep by RK4, half linear flow.
    Strang,
    /// Classical RK4 on the whole right-hand side.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Fast-scale parameter of the full equation.
    pub epsilon: f64,
    pub scheme: Scheme,
    /// `d₀` of the full equation.
    pub profile: PiecewiseProfile,
    /// Sample every this many steps.
    pub sample_every: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            dt: 1e-2,
            t_end: 10.0,
            epsilon: 0.1,
            scheme: Scheme::Strang,
            profile: PiecewiseProfile::model(),
            sample_every: 1,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt < 0.1) {
            return Err(Error::invalid("dt must lie in (0, 0.1)"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end must be finite and nonnegative"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every must be positive"));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Exact flow `e^{iρΔ}` of the Dirichlet Laplacian on `[-M, M]`.
#[derive(Debug, Clone)]
pub struct BoxFlow {
    radius: usize,
    /// Orthonormal sine modes, row `k` is mode `k+1`.
    modes: Vec<f64>,
    /// Eigenvalues `-4 sin²(πk/(2(n+1)))`.
    eigen: Vec<f64>,
}

impl BoxFlow {
    pub fn new(radius: usize) -> Self {
        let n = 2 * radius + 1;
        let h = core::f64::consts::PI / (n + 1) as f64;
        let c = (2.0 / (n + 1) as f64).sqrt();
        let mut modes = Vec::with_capacity(n * n);
        for k in 1..=n {
            for j in 1..=n {
                modes.push(c * (h * (k * j % (2 * (n + 1))) as f64).sin());
            }
        }
        let eigen = (1..=n).map(|k| -4.0 * (0.5 * h * k as f64).sin().powi(2)).collect();
        BoxFlow { radius, modes, eigen }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Coefficients of `v` in the sine basis.
    pub fn analyze(&self, v: &LatticeField) -> Vec<Complex64> {
        let n = 2 * self.radius + 1;
        let vals = v.resized(self.radius).into_values();
        (0..n)
            .map(|k| {
                let row = &self.modes[k * n..(k + 1) * n];
                row.iter().zip(&vals).fold(Complex64::new(0.0, 0.0), |acc, (s, z)| acc + z * s)
            })
            .collect()
    }

    /// `Σ_k e^{iρλ_k} c_k s_k`.
    pub fn synthesize(&self, coeffs: &[Complex64], rho: f64) -> LatticeField {
        let n = 2 * self.radius + 1;
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in coeffs.iter().enumerate() {
            let z = c * Complex64::from_polar(1.0, rho * self.eigen[k]);
            for (o, s) in out.iter_mut().zip(&self.modes[k * n..(k + 1) * n]) {
                *o += z * s;
            }
        }
        LatticeField::from_values(self.radius, out).expect("box length")
    }

    /// `e^{iρΔ} v`.
    pub fn apply(&self, rho: f64, v: &LatticeField) -> LatticeField {
        if rho == 0.0 {
            return v.resized(self.radius);
        }
        self.synthesize(&self.analyze(v), rho)
    }
}

fn check_drift(before: f64, after: &LatticeField) -> Result<()> {
    let n = after.norm2();
    if !n.is_finite() {
        return Err(Error::StepRejected { drift: f64::INFINITY });
    }
    let drift = if before == 0.0 { n } else { (n - before).abs() / before };
    if drift > MAX_STEP_DRIFT {
        return Err(Error::StepRejected { drift });
    }
    Ok(())
}

fn rk4(v: &LatticeField, dt: f64, rhs: impl Fn(&LatticeField) -> Result<LatticeField>) -> Result<LatticeField> {
    let h = Complex64::new(dt, 0.0);
    let half = Complex64::new(0.5 * dt, 0.0);
    let k1 = rhs(v)?;
    let k2 = rhs(&v.add_scaled(half, &k1))?;
    let k3 = rhs(&v.add_scaled(half, &k2))?;
    let k4 = rhs(&v.add_scaled(h, &k3))?;
    let incr = k1.add(&k2.scaled_real(2.0)).add(&k3.scaled_real(2.0)).add(&k4);
    Ok(v.add_scaled(h / 6.0, &incr))
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Integrator of the averaged equation on a fixed box.
pub struct AveragedFlow<'a> {
    fun: Functional<'a>,
    flow: BoxFlow,
    scheme: Scheme,
}

impl<'a> AveragedFlow<'a> {
    pub fn new(problem: &'a Problem, radius: usize, scheme: Scheme) -> Result<Self> {
        Ok(AveragedFlow { fun: problem.functional(radius)?, flow: BoxFlow::new(radius), scheme })
    }

    pub fn radius(&self) -> usize {
        self.flow.radius()
    }

    pub fn functional(&self) -> &Functional<'a> {
        &self.fun
    }

    /// One step of size `dt`; rejected if `‖v‖₂` drifts by more than `1e-6`.
    pub fn step(&self, v: &LatticeField, dt: f64) -> Result<LatticeField> {
        let v = v.resized(self.radius());
        let d = self.fun.problem().d_av;
        let out = match self.scheme {
            Scheme::Strang => {
                let a = self.flow.apply(0.5 * d * dt, &v);
                // i ∂_t v = -∇N(v)
                let b = rk4(&a, dt, |w| Ok(self.fun.potential_gradient(w)?.scaled(I)))?;
                self.flow.apply(0.5 * d * dt, &b)
            }
            // i ∂_t v = ∇H(v)
            Scheme::Rk4 => rk4(&v, dt, |w| Ok(self.fun.gradient(w)?.scaled(-I)))?,
        };
        check_drift(v.norm2(), &out)?;
        Ok(out)
    }
}

/// One averaged step on the box of `v`.
pub fn step_averaged(problem: &Problem, v: &LatticeField, dt: f64, scheme: Scheme) -> Result<LatticeField> {
    AveragedFlow::new(problem, v.radius(), scheme)?.step(v, dt)
}

/// State of a trajectory at a sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    /// `‖|v(t)| - |reference(t)|‖₂ / ‖v(0)‖₂`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<(f64, LatticeField)>,
    pub last: LatticeField,
}

impl Trajectory {
    pub fn max_deviation(&self) -> f64 {
        self.samples.iter().map(|s| s.deviation).fold(0.0, f64::max)
    }
}

fn amplitude_gap(a: &LatticeField, b: &LatticeField) -> f64 {
    let r = a.radius().max(b.radius());
    let (a, b) = (a.resized(r), b.resized(r));
    crate::sum::sum(a.values().iter().zip(b.values()).map(|(x, y)| (x.norm() - y.norm()).powi(2))).sqrt()
}

/// Averaged flow from `v0` on a box of `radius`, with deviation measured
/// against `|v0|`. `snapshot_every = 0` keeps no snapshots.
pub fn run_averaged(problem: &Problem, v0: &LatticeField, radius: usize, cfg: &PropagationConfig, snapshot_every: usize) -> Result<Trajectory> {
    cfg.validate()?;
    let flow = AveragedFlow::new(problem, radius, cfg.scheme)?;
    let v0 = v0.resized(radius);
    let n0 = v0.norm2();
    if n0 == 0.0 {
        return Err(Error::ZeroField);
    }
    let sample = |t: f64, v: &LatticeField| -> Result<Sample> {
        Ok(Sample { t, norm: v.norm2(), energy: flow.functional().hamiltonian(v)?, deviation: amplitude_gap(v, &v0) / n0 })
    };
    let mut v = v0.clone();
    let mut samples = alloc::vec![sample(0.0, &v)?];
    let mut snapshots = Vec::new();
    if snapshot_every > 0 {
        snapshots.push((0.0, v.clone()));
    }
    let steps = cfg.steps();
    for k in 1..=steps {
        let t = k as f64 * cfg.dt;
        v = flow.step(&v, cfg.dt)?;
        if k % cfg.sample_every == 0 || k == steps {
            samples.push(sample(t, &v)?);
        }
        if snapshot_every > 0 && (k % snapshot_every == 0 || k == steps) {
            snapshots.push((t, v.clone()));
        }
    }
    Ok(Trajectory { samples, snapshots, last: v })
}

/// The full non-autonomous equation on a fixed box.
pub struct FullFlow {
    flow: BoxFlow,
    profile: PiecewiseProfile,
    epsilon: f64,
    d_av: f64,
    /// `None` switches the nonlinearity off.
    nonlinearity: Option<Nonlinearity>,
}

impl FullFlow {
    pub fn new(radius: usize, profile: PiecewiseProfile, epsilon: f64, d_av: f64, nonlinearity: Option<Nonlinearity>) -> Result<Self> {
        if !(epsilon > 0.0) || !(d_av >= 0.0) {
            return Err(Error::invalid("need epsilon > 0 and d_av >= 0"));
        }
        Ok(FullFlow { flow: BoxFlow::new(radius), profile, epsilon, d_av, nonlinearity })
    }

    pub fn radius(&self) -> usize {
        self.flow.radius()
    }

    pub fn box_flow(&self) -> &BoxFlow {
        &self.flow
    }

    /// `∫_0^t d(s) ds = D(t/ε) + d_av t`.
    pub fn accumulated(&self, t: f64) -> f64 {
        self.profile.integral_at(t / self.epsilon) + self.d_av * t
    }

    /// Jump times of `d` strictly inside `(t0, t1)`.
    fn jumps(&self, t0: f64, t1: f64) -> Vec<f64> {
        let (s0, s1) = (t0 / self.epsilon, t1 / self.epsilon);
        let period = self.profile.period();
        let starts = self.profile.breakpoints();
        let mut out = Vec::new();
        let mut k = (s0 / period).floor() - 1.0;
        while k * period <= s1 {
            for b in &starts {
                let s = k * period + b;
                let t = s * self.epsilon;
                if t > t0 + 1e-12 * self.epsilon && t < t1 - 1e-12 * self.epsilon {
                    out.push(t);
                }
            }
            k += 1.0;
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn local(&self, u: &LatticeField, dt: f64) -> LatticeField {
        match &self.nonlinearity {
            // |u| is invariant, so the phase flow is exact
            Some(v) => u.map(|z| z * Complex64::from_polar(1.0, v.phase_rate(z.norm()) * dt)),
            None => u.clone(),
        }
    }

    fn strang(&self, u: &LatticeField, t0: f64, t1: f64) -> LatticeField {
        let mid = 0.5 * (t0 + t1);
        let a = self.flow.apply(self.accumulated(mid) - self.accumulated(t0), u);
        let b = self.local(&a, t1 - t0);
        self.flow.apply(self.accumulated(t1) - self.accumulated(mid), &b)
    }

    /// Strang step over `[t, t + dt]`, split at the jumps of `d`.
    pub fn step(&self, u: &LatticeField, t: f64, dt: f64) -> Result<LatticeField> {
        let u0 = u.resized(self.radius());
        let mut cuts = alloc::vec![t];
        cuts.extend(self.jumps(t, t + dt));
        cuts.push(t + dt);
        let mut v = u0.clone();
        for w in cuts.windows(2) {
            v = self.strang(&v, w[0], w[1]);
        }
        check_drift(u0.norm2(), &v)?;
        Ok(v)
    }
}

/// One full-equation step, see [`FullFlow::step`].
pub fn step_full(u: &LatticeField, t: f64, dt: f64, cfg: &PropagationConfig, d_av: f64, nonlinearity: Option<&Nonlinearity>) -> Result<LatticeField> {
    FullFlow::new(u.radius(), cfg.profile.clone(), cfg.epsilon, d_av, nonlinearity.cloned())?.step(u, t, dt)
}

/// Full equation from `u0`; the deviation is measured against
/// `|e^{iD(t/ε)Δ} φ|`, the amplitude of the averaged-flow reference.
pub fn run_full(flow: &FullFlow, u0: &LatticeField, cfg: &PropagationConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let u0 = u0.resized(flow.radius());
    let n0 = u0.norm2();
    if n0 == 0.0 {
        return Err(Error::ZeroField);
    }
    let coeffs = flow.box_flow().analyze(&u0);
    let reference = |t: f64| flow.box_flow().synthesize(&coeffs, flow.profile.integral_at(t / flow.epsilon));
    let sample = |t: f64, u: &LatticeField| Sample { t, norm: u.norm2(), energy: f64::NAN, deviation: amplitude_gap(u, &reference(t)) / n0 };
    let mut u = u0.clone();
    let mut samples = alloc::vec![sample(0.0, &u)];
    let steps = cfg.steps();
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * cfg.dt;
        let t = k as f64 * cfg.dt;
        u = flow.step(&u, t0, t - t0)?;
        if k % cfg.sample_every == 0 || k == steps {
            samples.push(sample(t, &u));
        }
    }
    Ok(Trajectory { samples, snapshots: Vec::new(), last: u })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreatherRow {
    pub epsilon: f64,
    /// `max_t ‖|u(t)| - |T_{D(t/ε)} φ|‖₂ / ‖φ‖₂`, `None` if the run failed.
    pub dev: Option<f64>,
    pub steps: usize,
    /// `max_t |‖u(t)‖₂ - ‖φ‖₂| / ‖φ‖₂`.
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreatherReport {
    /// `2π/|ω|`.
    pub slow_period: f64,
    pub rows: Vec<BreatherRow>,
    /// Errors per `ε`, as `(ε, message)`.
    pub failures: Vec<(f64, alloc::string::String)>,
    /// `dev` strictly decreasing along the given `ε` order.
    pub decreasing: bool,
}

/// Propagates the full equation from `u₀ = φ` over one slow period `2π/|ω|`
/// for each `ε`, with step `min(cfg.dt, ε·steps_per_fast_unit⁻¹)` and a
/// box grown by `pad` sites.
pub fn breather_experiment(
    problem: &Problem,
    phi: &LatticeField,
    omega: f64,
    cfg: &PropagationConfig,
    epsilons: &[f64],
    steps_per_fast_unit: usize,
    pad: usize,
) -> Result<BreatherReport> {
    if !(omega < 0.0) {
        return Err(Error::invalid("breather experiment needs omega < 0"));
    }
    if steps_per_fast_unit == 0 {
        return Err(Error::invalid("steps_per_fast_unit must be positive"));
    }
    let slow_period = 2.0 * core::f64::consts::PI / omega.abs();
    let radius = phi.radius() + pad;
    let n0 = phi.norm2();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &eps in epsilons {
        let dt = cfg.dt.min(eps / steps_per_fast_unit as f64);
        let run_cfg = PropagationConfig { dt, t_end: slow_period, epsilon: eps, sample_every: 1, ..cfg.clone() };
        let outcome = FullFlow::new(radius, cfg.profile.clone(), eps, problem.d_av, Some(problem.nonlinearity.clone()))
            .and_then(|flow| run_full(&flow, phi, &run_cfg));
        match outcome {
            Ok(tr) => {
                let norm_drift = tr.samples.iter().map(|s| (s.norm - n0).abs() / n0).fold(0.0, f64::max);
                rows.push(BreatherRow { epsilon: eps, dev: Some(tr.max_deviation()), steps: tr.samples.len() - 1, norm_drift });
            }
            Err(e) => {
                failures.push((eps, alloc::format!("{e}")));
                rows.push(BreatherRow { epsilon: eps, dev: None, steps: 0, norm_drift: f64::NAN });
            }
        }
    }
    let devs: Vec<Option<f64>> = rows.iter().map(|r| r.dev).collect();
    let decreasing = devs.iter().all(Option::is_some) && devs.windows(2).all(|w| w[1].unwrap() < w[0].unwrap());
    Ok(BreatherReport { slow_period, rows, failures, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{apply_evolution, EvolutionMethod};
    use crate::profile::DiffractionMeasure;
    use crate::random::{random_field, rng};

    #[test]
    fn box_flow_is_isometric_and_matches_lattice_flow_inside() {
        let flow = BoxFlow::new(40);
        let f = random_field(&mut rng(2), 5).resized(40);
        let g = flow.apply(0.7, &f);
        assert!((g.norm2() - f.norm2()).abs() < 1e-13 * f.norm2());
        let h = apply_evolution(0.7, &f.resized(5), &EvolutionMethod::default()).unwrap();
        assert!(g.sub(&h.resized(40)).norm2() < 1e-12);
    }

    #[test]
    fn zero_field_stays_zero() {
        let p = Problem::new(1.0, DiffractionMeasure::dirac(), Nonlinearity::kerr(), 1.0).unwrap();
        let z = LatticeField::zeros(4);
        assert_eq!(step_averaged(&p, &z, 0.01, Scheme::Strang).unwrap().norm2(), 0.0);
    }

    #[test]
    fn single_site_phase_rotation() {
        // d_av = 0, μ = δ₀: v(t) = e^{iλt} δ₀ for Kerr with |v|² = λ
        let p = Problem::new(0.0, DiffractionMeasure::dirac(), Nonlinearity::kerr(), 2.0).unwrap();
        let mut v = LatticeField::delta(3, 0, 2f64.sqrt());
        let flow = AveragedFlow::new(&p, 3, Scheme::Strang).unwrap();
        for _ in 0..1000 {
            v = flow.step(&v, 1e-3).unwrap();
        }
        assert!((v.get(0).norm() - 2f64.sqrt()).abs() < 1e-12);
        assert!((v.get(0).arg() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn jumps_inside_step() {
        let f = FullFlow::new(2, PiecewiseProfile::model(), 0.1, 0.0, None).unwrap();
        let j = f.jumps(0.05, 0.35);
        assert_eq!(j.len(), 3);
        assert!((j[0] - 0.1).abs() < 1e-15 && (j[2] - 0.3).abs() < 1e-15);
    }
}
