//! Minimization of `H` on the sphere `‖f‖₂² = λ`.
//!
//! Projected gradient descent with Barzilai–Borwein step lengths, Armijo
//! backtracking and the retraction `f ↦ √λ f/‖f‖₂`. The translation
//! symmetry is fixed by moving the peak to site 0 every few iterations.
//! Several starting fields are tried and the lowest energy wins. When a
//! converged field still has amplitude above the tail floor at the box
//! edge, the box is enlarged and the descent continues.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::energy::{multiplier, residual, Evaluation, Functional, Problem};
use crate::lattice::{BoxPolicy, ExpProfile, LatticeField};
use crate::random::{derive_seed, random_field, rng};
use crate::{Complex64, Error, Result};

/// Best energy above this is reported as "no negative-energy minimizer".
pub const NEGATIVE_ENERGY_GATE: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub max_iters: usize,
    /// Stop when `‖g - ωf‖₂/‖f‖₂` falls below this.
    pub grad_tol: f64,
    pub step_init: f64,
    /// Step reduction factor in backtracking, in `(0, 1)`.
    pub backtrack: f64,
    /// Recentre the peak every this many iterations (0 disables).
    pub recenter_every: usize,
    /// Number of random starts on top of the deterministic ones.
    pub restarts: usize,
    pub seed: u64,
    pub box_policy: BoxPolicy,
    pub max_box_radius: usize,
    /// Apply one linearized tail correction after convergence.
    pub polish: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 20_000,
            grad_tol: 1e-9,
            step_init: 0.1,
            backtrack: 0.5,
            recenter_every: 50,
            restarts: 1,
            seed: 0,
            box_policy: BoxPolicy::default(),
            max_box_radius: 400,
            polish: true,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.grad_tol > 0.0) || !(self.step_init > 0.0) {
            return Err(Error::invalid("grad_tol and step_init must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::invalid("backtrack factor must lie in (0, 1)"));
        }
        BoxPolicy::new(self.box_policy.box_radius, self.box_policy.tail_floor)?;
        if self.max_box_radius < self.box_policy.box_radius {
            return Err(Error::invalid("max_box_radius below the initial box radius"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Best energy above [`NEGATIVE_ENERGY_GATE`]: minimizing sequences spread out.
    NoNegativeEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartKind {
    SingleSite,
    /// `A e^{-ν|x|}` with the given rate.
    ExpProfile(f64),
    /// Random field from the given seed.
    Random(u64),
}

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub start: StartKind,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub field: LatticeField,
    pub lambda: f64,
    pub d_av: f64,
    pub energy: f64,
    pub omega: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Energy of the starting field of the winning run.
    pub initial_energy: f64,
    /// `(E, projected-gradient norm)` per accepted step of the winning run.
    pub history: Vec<(f64, f64)>,
    /// All starts, in the order tried; distinct energies flag multiple local minima.
    pub starts: Vec<StartOutcome>,
}

struct Run {
    field: LatticeField,
    eval: Evaluation,
    omega: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    initial_energy: f64,
    history: Vec<(f64, f64)>,
}

fn retract(f: &LatticeField, lambda: f64) -> Result<LatticeField> {
    let n = f.norm2();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroField);
    }
    Ok(f.scaled_real(lambda.sqrt() / n))
}

/// Projected gradient `g - ωf`, `ω` and the relative residual.
fn project(g: &LatticeField, f: &LatticeField) -> Result<(LatticeField, f64, f64)> {
    let omega = multiplier(g, f)?;
    let pg = g.add_scaled(Complex64::new(-omega, 0.0), f);
    let res = pg.norm2() / f.norm2();
    Ok((pg, omega, res))
}

/// Size of rounding noise in `H` at this point.
fn energy_noise(ev: &Evaluation, d_av: f64) -> f64 {
    64.0 * f64::EPSILON * (ev.energy.abs() + ev.potential.abs() + 0.5 * d_av * ev.kinetic)
}

fn descend(fun: &Functional<'_>, start: &LatticeField, cfg: &SolveConfig) -> Result<Run> {
    let lambda = fun.problem().lambda;
    let d_av = fun.problem().d_av;
    let mut f = retract(&start.resized(fun.radius()), lambda)?;
    let mut ev = fun.evaluate(&f)?;
    let initial_energy = ev.energy;
    let (mut pg, mut omega, mut res) = project(&ev.gradient, &f)?;
    let mut eta = cfg.step_init;
    let mut prev: Option<(LatticeField, LatticeField)> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < cfg.max_iters && res >= cfg.grad_tol {
        iterations += 1;
        if cfg.recenter_every > 0 && iterations % cfg.recenter_every == 0 {
            let peak = f.peak_site();
            if peak != 0 {
                f = retract(&f.shifted(-peak), lambda)?;
                ev = fun.evaluate(&f)?;
                (pg, omega, res) = project(&ev.gradient, &f)?;
                prev = None;
            }
        }
        if let Some((f_old, pg_old)) = &prev {
            let s = f.sub(f_old);
            let y = pg.sub(pg_old);
            let sy = s.re_inner(&y);
            if sy > 0.0 {
                eta = (s.norm_sq() / sy).clamp(1e-8, 1e4);
            }
        }
        let pg2 = pg.norm_sq();
        let noise = energy_noise(&ev, d_av);
        let mut accepted = None;
        for _ in 0..80 {
            let trial = retract(&f.add_scaled(Complex64::new(-eta, 0.0), &pg), lambda)?;
            let tev = fun.evaluate(&trial)?;
            let decrease = ev.energy - tev.energy;
            let armijo = decrease >= 1e-4 * eta * pg2;
            // below rounding the energy cannot certify progress; accept
            // steps that keep H within noise and shrink the residual
            let roundoff = eta * pg2 < noise && decrease >= -noise;
            if armijo || roundoff {
                let (tpg, tomega, tres) = project(&tev.gradient, &trial)?;
                if armijo || tres < res {
                    accepted = Some((trial, tev, tpg, tomega, tres));
                    break;
                }
            }
            eta *= cfg.backtrack;
        }
        let Some((trial, tev, tpg, tomega, tres)) = accepted else {
            break;
        };
        prev = Some((f, pg));
        f = trial;
        ev = tev;
        pg = tpg;
        omega = tomega;
        res = tres;
        history.push((ev.energy, res));
    }
    let converged = res < cfg.grad_tol;
    Ok(Run { field: f, eval: ev, omega, residual: res, iterations, converged, initial_energy, history })
}

/// Solves `(-d_av Δ - ω) u = rhs` on the box with zero boundary values
/// (`d_av > 0`), or divides by `-ω` when `d_av = 0`.
fn solve_shifted(d_av: f64, omega: f64, rhs: &LatticeField) -> LatticeField {
    let n = rhs.len();
    let b = rhs.values();
    let diag = 2.0 * d_av - omega;
    if d_av == 0.0 {
        return rhs.scaled_real(1.0 / diag);
    }
    let off = -d_av;
    // Thomas algorithm; the matrix is strictly diagonally dominant for ω < 0
    let mut c = Vec::with_capacity(n);
    let mut dvec: Vec<Complex64> = Vec::with_capacity(n);
    c.push(off / diag);
    dvec.push(b[0] / diag);
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c.push(off / m);
        dvec.push((b[i] - dvec[i - 1] * off) / m);
    }
    for i in (0..n - 1).rev() {
        let next = dvec[i + 1];
        dvec[i] -= next * c[i];
    }
    LatticeField::from_values(rhs.radius(), dvec).expect("finite solve")
}

/// One step `f' = (-d_av Δ - ω)^{-1} ∇N(f)` renormalized to power `λ`.
///
/// Near a solution this leaves the core unchanged to the order of the
/// residual, while the tail is rebuilt from the core, so tail amplitudes far
/// below the residual level come out with relative rather than absolute
/// accuracy.
pub fn polish(fun: &Functional<'_>, f: &LatticeField, omega: f64) -> Result<LatticeField> {
    if !(omega < 0.0) {
        return Err(Error::invalid("tail correction needs omega < 0"));
    }
    let dn = fun.potential_gradient(f)?;
    let u = solve_shifted(fun.problem().d_av, omega, &dn);
    retract(&u, fun.problem().lambda)
}

fn starts(problem: &Problem, fun: &Functional<'_>, cfg: &SolveConfig) -> Result<Vec<(StartKind, LatticeField)>> {
    let radius = fun.radius();
    let lambda = problem.lambda;
    let single = LatticeField::delta(radius, 0, lambda.sqrt());
    let mut out = alloc::vec![(StartKind::SingleSite, single.clone())];
    // rate from the heuristic relation 2d(cosh ν - 1) = |ω| at the single-site ω
    let omega = fun.lagrange_multiplier(&single)?;
    let nu = if problem.d_av > 0.0 && omega < 0.0 {
        crate::decay::heuristic_rate(omega, problem.d_av).unwrap_or(1.0)
    } else {
        1.0
    };
    for rate in [nu, (nu / 4.0).max(0.05)] {
        let a = ExpProfile::amplitude_for_power(lambda, rate);
        let f = ExpProfile::new(a, rate)?.field(radius);
        out.push((StartKind::ExpProfile(rate), f));
    }
    for k in 0..cfg.restarts {
        let seed = derive_seed(cfg.seed, k as u64);
        let f = random_field(&mut rng(seed), radius.min(12));
        out.push((StartKind::Random(seed), f.resized(radius)));
    }
    Ok(out)
}

fn better(a: &Run, b: &Run) -> bool {
    a.eval.energy < b.eval.energy
}

/// Minimizes `H` on `‖f‖₂² = λ` over the configured starts.
pub fn minimize(problem: &Problem, cfg: &SolveConfig) -> Result<SolveResult> {
    problem.validate()?;
    cfg.validate()?;
    let mut radius = cfg.box_policy.box_radius;
    let fun = problem.functional(radius)?;
    let mut outcomes = Vec::new();
    let mut best: Option<Run> = None;
    for (kind, start) in starts(problem, &fun, cfg)? {
        let run = descend(&fun, &start, cfg)?;
        outcomes.push(StartOutcome {
            start: kind,
            energy: run.eval.energy,
            residual: run.residual,
            iterations: run.iterations,
            converged: run.converged,
        });
        if best.as_ref().is_none_or(|b| better(&run, b)) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one start");
    let mut total_iters = best.iterations;
    let mut history = core::mem::take(&mut best.history);
    let initial_energy = best.initial_energy;
    // grow the box while the tail is cut off
    while best.eval.energy <= NEGATIVE_ENERGY_GATE
        && best.field.edge_amplitude() > cfg.box_policy.tail_floor
        && radius < cfg.max_box_radius
    {
        radius = (radius * 3 / 2 + 10).min(cfg.max_box_radius);
        let fun = problem.functional(radius)?;
        let run = descend(&fun, &best.field, cfg)?;
        total_iters += run.iterations;
        history.extend_from_slice(&run.history);
        best = run;
    }
    let fun = problem.functional(radius)?;
    let peak = best.field.peak_site();
    if peak != 0 {
        let field = retract(&best.field.shifted(-peak), problem.lambda)?;
        let eval = fun.evaluate(&field)?;
        let (_, omega, res) = project(&eval.gradient, &field)?;
        best = Run { field, eval, omega, residual: res, converged: res < cfg.grad_tol, ..best };
    }
    if cfg.polish && best.converged && best.omega < 0.0 && best.eval.energy <= NEGATIVE_ENERGY_GATE {
        let candidate = polish(&fun, &best.field, best.omega)?;
        let ev = fun.evaluate(&candidate)?;
        let (_, omega, res) = project(&ev.gradient, &candidate)?;
        let noise = energy_noise(&best.eval, problem.d_av);
        if res <= best.residual.max(cfg.grad_tol) && ev.energy <= best.eval.energy + noise {
            best = Run { field: candidate, eval: ev, omega, residual: res, ..best };
        }
    }
    let status = if best.eval.energy > NEGATIVE_ENERGY_GATE {
        SolveStatus::NoNegativeEnergy
    } else if best.converged {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    let omega = best.omega;
    let res = residual(&best.eval.gradient, &best.field, omega)?;
    Ok(SolveResult {
        field: best.field,
        lambda: problem.lambda,
        d_av: problem.d_av,
        energy: best.eval.energy,
        omega,
        residual: res,
        iterations: total_iters,
        converged: best.converged,
        status,
        initial_energy,
        history,
        starts: outcomes,
    })
}

/// One point of `λ ↦ E_λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub lambda: f64,
    pub energy: f64,
    pub omega: f64,
    pub residual: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveViolation {
    /// `E_λ > 0` beyond tolerance.
    Positive { lambda: f64, energy: f64 },
    /// `E` increased from `lambda_lo` to `lambda_hi`.
    Increasing { lambda_lo: f64, lambda_hi: f64, rise: f64 },
    /// `E_{λ₁} + E_{λ₂} ≤ E_{λ₁+λ₂}` where the energies are negative.
    NotStrictlySubadditive { lambda1: f64, lambda2: f64, gap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCurve {
    pub points: Vec<CurvePoint>,
    pub violations: Vec<CurveViolation>,
    /// Solver errors per grid point, as `(λ, message)`.
    pub failures: Vec<(f64, alloc::string::String)>,
}

/// Tolerance on energy comparisons along a curve.
pub fn curve_tolerance(energy: f64) -> f64 {
    1e-9 * energy.abs().max(1.0)
}

/// Checks sign, monotonicity and strict subadditivity on solved points.
/// Subadditivity is tested on every pair whose sum is also a grid point.
pub fn curve_violations(points: &[CurvePoint]) -> Vec<CurveViolation> {
    let mut out = Vec::new();
    for p in points {
        if p.energy > 1e-10 {
            out.push(CurveViolation::Positive { lambda: p.lambda, energy: p.energy });
        }
    }
    for w in points.windows(2) {
        let rise = w[1].energy - w[0].energy;
        if rise > curve_tolerance(w[0].energy) {
            out.push(CurveViolation::Increasing { lambda_lo: w[0].lambda, lambda_hi: w[1].lambda, rise });
        }
    }
    for (i, a) in points.iter().enumerate() {
        for b in &points[i..] {
            let target = a.lambda + b.lambda;
            let Some(c) = points.iter().find(|c| (c.lambda - target).abs() <= 1e-12 * target) else {
                continue;
            };
            if a.energy < -1e-8 && b.energy < -1e-8 {
                let gap = a.energy + b.energy - c.energy;
                if !(gap > 0.0) {
                    out.push(CurveViolation::NotStrictlySubadditive { lambda1: a.lambda, lambda2: b.lambda, gap });
                }
            }
        }
    }
    out
}

/// Independent minimizations over an increasing grid of powers.
pub fn energy_curve(problem: &Problem, lambdas: &[f64], cfg: &SolveConfig) -> Result<EnergyCurve> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("lambda grid must be positive and increasing"));
    }
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &lambda in lambdas {
        match minimize(&problem.with_lambda(lambda), cfg) {
            Ok(r) => points.push(CurvePoint {
                lambda,
                energy: r.energy,
                omega: r.omega,
                residual: r.residual,
                status: r.status,
            }),
            Err(e) => failures.push((lambda, alloc::format!("{e}"))),
        }
    }
    let violations = curve_violations(&points);
    Ok(EnergyCurve { points, violations, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{DiffractionMeasure, Nonlinearity};

    #[test]
    fn anticontinuum_kerr_ground_state() {
        let p = Problem::new(0.0, DiffractionMeasure::dirac(), Nonlinearity::kerr(), 2.0).unwrap();
        let r = minimize(&p, &SolveConfig { box_policy: BoxPolicy::new(8, 1e-13).unwrap(), ..Default::default() }).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.energy + 1.0).abs() < 1e-12);
        assert!((r.omega + 2.0).abs() < 1e-12);
        assert!((r.field.norm_sq() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_solver_inverts() {
        let rhs = LatticeField::from_fn(5, |x| Complex64::new(x as f64, 1.0));
        let u = solve_shifted(0.7, -1.3, &rhs);
        let lap = u.laplacian_in_box();
        for x in rhs.sites() {
            let lhs = -0.7 * lap.get(x) + 1.3 * u.get(x);
            assert!((lhs - rhs.get(x)).norm() < 1e-13);
        }
    }

    #[test]
    fn curve_checks_flag_violations() {
        let pt = |lambda: f64, energy: f64| CurvePoint { lambda, energy, omega: -1.0, residual: 0.0, status: SolveStatus::Converged };
        let v = curve_violations(&[pt(1.0, -0.25), pt(2.0, -0.5), pt(4.0, -0.1)]);
        assert!(v.iter().any(|v| matches!(v, CurveViolation::Increasing { .. })));
        assert!(v.iter().any(|v| matches!(v, CurveViolation::NotStrictlySubadditive { .. })));
        assert!(curve_violations(&[pt(1.0, -0.25), pt(2.0, -1.0), pt(4.0, -4.0)]).is_empty());
    }
}
