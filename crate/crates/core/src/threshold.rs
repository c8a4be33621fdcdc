//! The quotient `R(λ) = sup_{‖f‖₂²=λ} N(f)/‖D₊f‖₂²` and the critical power
//! `λ_cr = inf{λ > 0 : R(λ) > d_av/2}`.
//!
//! `R̂(λ)` is the best quotient found by projected ascent, so it bounds the
//! supremum from below and nothing more. The authoritative `λ_cr` estimate
//! bisects on the sign of `E_λ`, using `E_λ < 0 ⟺ R(λ) > d_av/2`; a
//! bisection on `R̂(λ) - d_av/2` is reported next to it.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::energy::{Functional, Problem};
use crate::lattice::{ExpProfile, LatticeField};
use crate::minimizer::{minimize, SolveConfig, NEGATIVE_ENERGY_GATE};
use crate::random::{derive_seed, random_field, rng};
use crate::{Complex64, Error, Result};

/// Fields with `‖D₊f‖₂²` below this are treated as flat and abandoned.
pub const FLAT_FIELD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientResult {
    pub lambda: f64,
    /// `R̂(λ)`, a lower bound of `R(λ)`.
    pub r_hat: f64,
    pub field: LatticeField,
    /// Best quotient per start; starts ending on a flat field report `None`.
    pub per_start: Vec<Option<f64>>,
    /// Quotient after every accepted ascent step of the best start.
    pub history: Vec<f64>,
}

struct Quotient {
    q: f64,
    grad: LatticeField,
}

fn quotient(fun: &Functional<'_>, f: &LatticeField) -> Result<Option<Quotient>> {
    let ev = fun.evaluate(f)?;
    if ev.kinetic < FLAT_FIELD {
        return Ok(None);
    }
    let q = ev.potential / ev.kinetic;
    let lap = f.laplacian_in_box();
    // ∇K = -2Δf, ∇Q = (∇N - Q∇K)/K
    let grad = LatticeField::from_fn(f.radius(), |x| (ev.potential_gradient.get(x) + 2.0 * q * lap.get(x)) / ev.kinetic);
    Ok(Some(Quotient { q, grad }))
}

const STALL_STEPS: usize = 20;

fn ascend(fun: &Functional<'_>, start: &LatticeField, cfg: &SolveConfig) -> Result<Option<(f64, LatticeField, Vec<f64>)>> {
    let lambda = fun.problem().lambda;
    let sphere = |f: &LatticeField| -> Result<LatticeField> {
        let n = f.norm2();
        if n == 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(f.scaled_real(lambda.sqrt() / n))
    };
    let project = |g: &LatticeField, f: &LatticeField| {
        let c = g.re_inner(f) / f.norm_sq();
        g.add_scaled(Complex64::new(-c, 0.0), f)
    };
    let mut f = sphere(&start.resized(fun.radius()))?;
    let Some(mut cur) = quotient(fun, &f)? else { return Ok(None) };
    let mut pg = project(&cur.grad, &f);
    let mut eta = cfg.step_init;
    let mut prev: Option<(LatticeField, LatticeField)> = None;
    let mut history = alloc::vec![cur.q];
    let mut stalled = 0;
    for _ in 0..cfg.max_iters {
        let pg2 = pg.norm_sq();
        if pg2.sqrt() * lambda.sqrt() <= cfg.grad_tol * cur.q.abs().max(1e-300) {
            break;
        }
        if let Some((f_old, pg_old)) = &prev {
            let s = f.sub(f_old);
            let y = pg.sub(pg_old);
            let sy = s.re_inner(&y);
            // ascent: the curvature along s is negative
            if sy < 0.0 {
                eta = (s.norm_sq() / -sy).clamp(1e-8, 1e6);
            }
        }
        let noise = 64.0 * f64::EPSILON * cur.q.abs();
        let mut accepted = None;
        for _ in 0..80 {
            let trial = sphere(&f.add_scaled(Complex64::new(eta, 0.0), &pg))?;
            match quotient(fun, &trial)? {
                Some(t) if t.q - cur.q >= 1e-4 * eta * pg2 || (eta * pg2 < noise && t.q >= cur.q) => {
                    accepted = Some((trial, t));
                    break;
                }
                None => return Ok(Some((cur.q, f, history))),
                _ => eta *= cfg.backtrack,
            }
        }
        let Some((trial, t)) = accepted else { break };
        // gains at roundoff level for many steps: the maximum is resolved
        stalled = if t.q - cur.q <= noise { stalled + 1 } else { 0 };
        if stalled >= STALL_STEPS {
            cur = t;
            f = trial;
            history.push(cur.q);
            break;
        }
        let npg = project(&t.grad, &trial);
        prev = Some((f, pg));
        f = trial;
        cur = t;
        pg = npg;
        history.push(cur.q);
    }
    Ok(Some((cur.q, f, history)))
}

/// `R̂(λ)` by projected ascent from single-site, exponential and random starts.
pub fn r_quotient_max(problem: &Problem, lambda: f64, cfg: &SolveConfig) -> Result<QuotientResult> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    let problem = problem.with_lambda(lambda);
    let radius = cfg.box_policy.box_radius;
    let fun = problem.functional(radius)?;
    let mut starts = alloc::vec![LatticeField::delta(radius, 0, lambda.sqrt())];
    for rate in [3.0, 1.0, 0.3] {
        starts.push(ExpProfile::new(ExpProfile::amplitude_for_power(lambda, rate), rate)?.field(radius));
    }
    for k in 0..cfg.restarts {
        let f = random_field(&mut rng(derive_seed(cfg.seed, k as u64)), radius.min(12));
        starts.push(f.resized(radius));
    }
    let mut best: Option<(f64, LatticeField, Vec<f64>)> = None;
    let mut per_start = Vec::new();
    for s in &starts {
        let out = ascend(&fun, s, cfg)?;
        per_start.push(out.as_ref().map(|o| o.0));
        if let Some(o) = out {
            if best.as_ref().is_none_or(|b| o.0 > b.0) {
                best = Some(o);
            }
        }
    }
    let (r_hat, field, history) = best.ok_or(Error::ZeroField)?;
    Ok(QuotientResult { lambda, r_hat, field, per_start, history })
}

/// Upper bound on `E_λ` from exponential trial fields `√λ-normalized A e^{-ν|x|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCertificate {
    pub rate: f64,
    pub radius: usize,
    /// `H` of the trial; `E_λ ≤ energy`.
    pub energy: f64,
}

/// Scans `ν` over a geometric grid and returns the lowest trial energy.
/// Trial fields are cut to `[-M, M]` with `M = min(⌈30/ν⌉, max_radius)` and
/// renormalized, so each is an admissible competitor.
pub fn negative_energy_certificate(problem: &Problem, max_radius: usize) -> Result<EnergyCertificate> {
    let lambda = problem.lambda;
    let mut best: Option<EnergyCertificate> = None;
    let count = 33;
    for k in 0..count {
        let rate = 1e-4 * f64::powf(4e4, k as f64 / (count - 1) as f64);
        let radius = ((30.0 / rate).ceil() as usize).clamp(1, max_radius);
        let f = ExpProfile::new(1.0, rate)?.field(radius);
        let f = f.scaled_real(lambda.sqrt() / f.norm2());
        let energy = problem.functional(radius)?.hamiltonian(&f)?;
        if best.is_none_or(|b| energy < b.energy) {
            best = Some(EnergyCertificate { rate, radius, energy });
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// One evaluation of the bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep {
    pub lambda: f64,
    /// `min(E from the minimizer, certificate energy)`.
    pub energy: f64,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEstimate {
    pub lambda_cr: f64,
    pub bracket: (f64, f64),
    pub trace: Vec<BisectionStep>,
}

/// Best available upper bound on `E_λ`.
pub fn energy_upper_bound(problem: &Problem, cfg: &SolveConfig, certificate_radius: usize) -> Result<f64> {
    let solved = minimize(problem, cfg)?.energy;
    if solved <= NEGATIVE_ENERGY_GATE || certificate_radius == 0 {
        return Ok(solved);
    }
    Ok(solved.min(negative_energy_certificate(problem, certificate_radius)?.energy))
}

fn bisect(lo: f64, hi: f64, mut above: impl FnMut(f64) -> Result<bool>) -> Result<(f64, f64, Vec<f64>)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidBracket { lo, hi });
    }
    if above(lo)? || !above(hi)? {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let mut mids = Vec::new();
    while (b - a) > 1e-3 * b {
        let m = (a * b).sqrt();
        mids.push(m);
        if above(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok((a, b, mids))
}

/// `λ_cr` by bisection on the sign of `E_λ` to relative width `1e-3`.
/// Needs `E_{λ_lo} ≥ 0 > E_{λ_hi}` (with the gate `-1e-10`).
pub fn lambda_cr_estimate(problem: &Problem, bracket: (f64, f64), cfg: &SolveConfig, certificate_radius: usize) -> Result<ThresholdEstimate> {
    if !(problem.d_av > 0.0) {
        return Err(Error::invalid("threshold estimation needs d_av > 0"));
    }
    let mut trace = Vec::new();
    let (a, b, _) = bisect(bracket.0, bracket.1, |lambda| {
        let energy = energy_upper_bound(&problem.with_lambda(lambda), cfg, certificate_radius)?;
        let negative = energy <= NEGATIVE_ENERGY_GATE;
        trace.push(BisectionStep { lambda, energy, negative });
        Ok(negative)
    })?;
    Ok(ThresholdEstimate { lambda_cr: (a * b).sqrt(), bracket: (a, b), trace })
}

/// Cross-check: bisection on `R̂(λ) - d_av/2`.
pub fn lambda_cr_from_quotient(problem: &Problem, bracket: (f64, f64), cfg: &SolveConfig) -> Result<ThresholdEstimate> {
    let half = problem.d_av / 2.0;
    let mut trace = Vec::new();
    let (a, b, _) = bisect(bracket.0, bracket.1, |lambda| {
        let r = r_quotient_max(problem, lambda, cfg)?.r_hat;
        trace.push(BisectionStep { lambda, energy: r - half, negative: r > half });
        Ok(r > half)
    })?;
    Ok(ThresholdEstimate { lambda_cr: (a * b).sqrt(), bracket: (a, b), trace })
}

/// `λ_cr = (d_av/(2R₀))^{2/(γ-2)}` for `V = c a^γ`.
pub fn pure_power_threshold(d_av: f64, r0: f64, gamma: f64) -> f64 {
    (d_av / (2.0 * r0)).powf(2.0 / (gamma - 2.0))
}

/// Outcome of the `γ₀`-scaling comparison over sampled `(λ, R̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub pairs: usize,
    /// `max (λ₂/λ₁)^{(γ₀-2)/2} R̂(λ₁) / R̂(λ₂)` over `λ₁ ≤ λ₂`.
    pub worst_ratio: f64,
    pub scaling_pass: bool,
    /// `(λ₀, lower, upper)` per sample when a threshold estimate was supplied.
    pub sandwich: Vec<(f64, f64, f64)>,
    pub sandwich_pass: bool,
}

impl ScalingReport {
    pub fn pass(&self) -> bool {
        self.scaling_pass && self.sandwich_pass
    }
}

/// `R̂(λ₂) ≥ (λ₂/λ₁)^{(γ₀-2)/2} R̂(λ₁)(1 - tol)` for every ordered pair with
/// `R̂ > 0`. With `threshold = Some((λ_cr_hat, d_av))` each sample also
/// yields `threshold_lower_bound ≤ λ_cr_hat ≤ threshold_upper_bound` with
/// `R̂` standing in for `R₀`, checked to relative `tol`.
pub fn scaling_checks(samples: &[(f64, f64)], gamma0: f64, tol: f64, threshold: Option<(f64, f64)>) -> Result<ScalingReport> {
    let pos: Vec<(f64, f64)> = samples.iter().copied().filter(|s| s.1 > 0.0).collect();
    if pos.len() < 2 {
        return Err(Error::invalid("scaling check needs two samples with positive quotient"));
    }
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for a in &pos {
        for b in &pos {
            if a.0 <= b.0 {
                pairs += 1;
                worst = worst.max((b.0 / a.0).powf((gamma0 - 2.0) / 2.0) * a.1 / b.1);
            }
        }
    }
    let mut sandwich = Vec::new();
    let mut sandwich_pass = true;
    if let Some((lcr, d_av)) = threshold {
        for &(l0, r0) in &pos {
            let lo = threshold_lower_bound(l0, r0, d_av, gamma0);
            let hi = threshold_upper_bound(l0, r0, d_av, gamma0);
            sandwich_pass &= lo <= lcr * (1.0 + tol) && lcr <= hi * (1.0 + tol);
            sandwich.push((l0, lo, hi));
        }
    }
    Ok(ScalingReport { pairs, worst_ratio: worst, scaling_pass: worst * (1.0 - tol) <= 1.0, sandwich, sandwich_pass })
}

/// `λ₀ min(d_av/(2R₀), 1)^{2/(γ₀-2)}`, valid when `R₀ ≥ R(λ₀)`.
pub fn threshold_lower_bound(lambda0: f64, r0: f64, d_av: f64, gamma0: f64) -> f64 {
    lambda0 * (d_av / (2.0 * r0)).min(1.0).powf(2.0 / (gamma0 - 2.0))
}

/// `λ₀ max(d_av/(2R₀), 1)^{2/(γ₀-2)}`, valid when `R₀ ≤ R(λ₀)`.
pub fn threshold_upper_bound(lambda0: f64, r0: f64, d_av: f64, gamma0: f64) -> f64 {
    lambda0 * (d_av / (2.0 * r0)).max(1.0).powf(2.0 / (gamma0 - 2.0))
}

/// Grid values and the threshold summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub lambda_grid: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub e_lambda: Vec<f64>,
    pub lambda_cr_hat: Option<f64>,
    /// `R̂(λ)/λ^{(γ-2)/2}` averaged over the grid, for pure powers.
    pub r0_hat: Option<f64>,
    pub trace: Vec<BisectionStep>,
    /// `λ_cr_hat` inside the grid hull.
    pub within_grid: bool,
}

/// `R̂` and `E_λ` on the grid, then `λ_cr` bisected on the first sign change of `E_λ`.
pub fn threshold_report(problem: &Problem, lambdas: &[f64], cfg: &SolveConfig, certificate_radius: usize) -> Result<ThresholdReport> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] <= w[0]) || lambdas[0] <= 0.0 {
        return Err(Error::invalid("lambda grid must be positive and increasing"));
    }
    let mut r_hat = Vec::new();
    let mut e_lambda = Vec::new();
    for &l in lambdas {
        r_hat.push(r_quotient_max(problem, l, cfg)?.r_hat);
        e_lambda.push(energy_upper_bound(&problem.with_lambda(l), cfg, certificate_radius)?);
    }
    threshold_from_grid(problem, lambdas, r_hat, e_lambda, cfg, certificate_radius)
}

/// Summary from grid values computed elsewhere, e.g. in parallel.
pub fn threshold_from_grid(
    problem: &Problem,
    lambdas: &[f64],
    r_hat: Vec<f64>,
    e_lambda: Vec<f64>,
    cfg: &SolveConfig,
    certificate_radius: usize,
) -> Result<ThresholdReport> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] <= w[0]) || lambdas[0] <= 0.0 {
        return Err(Error::invalid("lambda grid must be positive and increasing"));
    }
    if r_hat.len() != lambdas.len() || e_lambda.len() != lambdas.len() {
        return Err(Error::invalid("grid values do not match the lambda grid"));
    }
    let r0_hat = match problem.nonlinearity.potential() {
        crate::profile::Potential::PowerSum(t) if t.len() == 1 => {
            let g = t[0].1;
            Some(lambdas.iter().zip(&r_hat).map(|(l, r)| r / l.powf((g - 2.0) / 2.0)).sum::<f64>() / lambdas.len() as f64)
        }
        _ => None,
    };
    let mut lambda_cr_hat = None;
    let mut trace = Vec::new();
    if problem.d_av > 0.0 {
        if e_lambda[0] <= NEGATIVE_ENERGY_GATE {
            lambda_cr_hat = Some(0.0);
        } else if let Some(i) = e_lambda.iter().position(|&e| e <= NEGATIVE_ENERGY_GATE) {
            let est = lambda_cr_estimate(problem, (lambdas[i - 1], lambdas[i]), cfg, certificate_radius)?;
            lambda_cr_hat = Some(est.lambda_cr);
            trace = est.trace;
        }
    }
    let within_grid = lambda_cr_hat.is_some_and(|l| l >= lambdas[0] && l <= lambdas[lambdas.len() - 1]);
    Ok(ThresholdReport { lambda_grid: lambdas.to_vec(), r_hat, e_lambda, lambda_cr_hat, r0_hat, trace, within_grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxPolicy;
    use crate::profile::{DiffractionMeasure, Nonlinearity};

    fn sextic(d_av: f64) -> Problem {
        Problem::new(d_av, DiffractionMeasure::dirac(), Nonlinearity::pure_power(1.0 / 6.0, 6.0).unwrap(), 1.0).unwrap()
    }

    fn small_box() -> SolveConfig {
        SolveConfig { box_policy: BoxPolicy::new(12, 1e-13).unwrap(), ..Default::default() }
    }

    #[test]
    fn sextic_quotient_between_bounds() {
        let r = r_quotient_max(&sextic(1.0), 1.0, &small_box()).unwrap();
        assert!(r.r_hat >= 1.0 / 12.0 - 1e-12 && r.r_hat <= 1.0 / 6.0, "{}", r.r_hat);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn scaling_report_on_exact_law() {
        let s: Vec<(f64, f64)> = [0.5, 1.0, 2.0].iter().map(|&l: &f64| (l, l * l / 12.0)).collect();
        let rep = scaling_checks(&s, 6.0, 1e-9, Some((6f64.sqrt(), 1.0))).unwrap();
        assert!(rep.pass() && (rep.worst_ratio - 1.0).abs() < 1e-12 && rep.pairs == 6);
        // for an exact pure power the bound on the far side of λ_cr is attained
        let cr = 6f64.sqrt();
        assert!(rep.sandwich.iter().all(|s| s.1 <= cr + 1e-12 && cr <= s.2 + 1e-12));
        assert!(rep.sandwich.iter().all(|s| (s.1 - cr).abs().min((s.2 - cr).abs()) < 1e-12));
    }

    #[test]
    fn bracket_must_change_sign() {
        let err = lambda_cr_estimate(&sextic(1.0), (5.0, 6.0), &small_box(), 0);
        assert!(matches!(err, Err(Error::InvalidBracket { .. })));
    }

    #[test]
    fn bounds_formulae() {
        assert_eq!(pure_power_threshold(1.0, 1.0 / 12.0, 6.0), 6f64.sqrt());
        assert!(threshold_lower_bound(2.0, 0.25, 1.0, 6.0) <= threshold_upper_bound(2.0, 0.25, 1.0, 6.0));
    }
}
