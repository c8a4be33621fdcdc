//! The nonlocal potential `N(f) = ∫ Σ_x V(|T_r f(x)|) μ(dr)`, the
//! Hamiltonian `H(f) = (d_av/2)‖D₊f‖₂² - N(f)`, and their gradient.
//!
//! Derivatives are taken on `ℂ^n ≅ ℝ^{2n}` with the pairing `Re⟨g, h⟩`,
//! so the gradient of `H` is the field
//! `g = -d_av Δf - Σ_j w_j T_{-r_j}[P(T_{r_j} f)]`. On a box `[-M, M]` this
//! is the exact gradient of the truncated functional: `N` is evaluated on
//! the box grown by the propagator margin, and the adjoint restricts back.

use alloc::vec::Vec;

use crate::evolution::{EvolutionMethod, Propagator};
use crate::lattice::LatticeField;
use crate::profile::{DiffractionMeasure, Nonlinearity};
use crate::sum::Accumulator;
use crate::{Error, Result};

/// `d_av`, `μ`, `V`, the power `λ = ‖φ‖₂²` and the propagator method.
#[derive(Debug, Clone)]
pub struct Problem {
    pub d_av: f64,
    pub measure: DiffractionMeasure,
    pub nonlinearity: Nonlinearity,
    pub lambda: f64,
    pub method: EvolutionMethod,
}

impl Problem {
    pub fn new(d_av: f64, measure: DiffractionMeasure, nonlinearity: Nonlinearity, lambda: f64) -> Result<Self> {
        let p = Problem { d_av, measure, nonlinearity, lambda, method: EvolutionMethod::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_av >= 0.0) || !self.d_av.is_finite() {
            return Err(Error::invalid("d_av must be finite and nonnegative"));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be finite and positive"));
        }
        self.method.validate()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Problem { lambda, ..self.clone() }
    }

    pub fn with_d_av(&self, d_av: f64) -> Self {
        Problem { d_av, ..self.clone() }
    }

    pub fn with_method(&self, method: EvolutionMethod) -> Self {
        Problem { method, ..self.clone() }
    }

    /// Functional for fields on `[-radius, radius]`.
    pub fn functional(&self, radius: usize) -> Result<Functional<'_>> {
        Functional::new(self, radius)
    }
}

/// Values and gradient at one field.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `H(f)`.
    pub energy: f64,
    /// `N(f)`.
    pub potential: f64,
    /// `‖D₊f‖₂²`.
    pub kinetic: f64,
    /// Gradient of `H`.
    pub gradient: LatticeField,
    /// Gradient of `N`.
    pub potential_gradient: LatticeField,
}

/// `N`, `H` and derivatives with cached propagator kernels for one box.
#[derive(Debug, Clone)]
pub struct Functional<'a> {
    problem: &'a Problem,
    propagator: Propagator,
    weights: Vec<f64>,
}

impl<'a> Functional<'a> {
    pub fn new(problem: &'a Problem, radius: usize) -> Result<Self> {
        problem.validate()?;
        let propagator = Propagator::new(&problem.measure.nodes(), radius, &problem.method)?;
        Ok(Functional { problem, propagator, weights: problem.measure.weights() })
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn radius(&self) -> usize {
        self.propagator.radius()
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    fn check(&self, f: &LatticeField) -> Result<()> {
        if f.radius() > self.radius() {
            return Err(Error::invalid("field box larger than the functional box"));
        }
        if !f.is_finite() {
            let site = f.sites().find(|&x| !(f.get(x).re.is_finite() && f.get(x).im.is_finite())).unwrap_or(0);
            return Err(Error::NonFinite { site });
        }
        Ok(())
    }

    /// `N(f)`.
    pub fn potential(&self, f: &LatticeField) -> Result<f64> {
        self.check(f)?;
        let v = &self.problem.nonlinearity;
        let mut acc = Accumulator::new();
        for (j, &w) in self.weights.iter().enumerate() {
            let u = self.propagator.forward(j, f);
            let mut inner = Accumulator::new();
            for z in u.values() {
                inner.add(v.v_from_sq(z.norm_sqr()));
            }
            acc.add(w * inner.value());
        }
        Ok(acc.value())
    }

    /// `‖D₊f‖₂²`.
    pub fn kinetic(&self, f: &LatticeField) -> f64 {
        f.dirichlet_energy()
    }

    /// `H(f) = (d_av/2)‖D₊f‖₂² - N(f)`.
    pub fn hamiltonian(&self, f: &LatticeField) -> Result<f64> {
        let n = self.potential(f)?;
        Ok(0.5 * self.problem.d_av * f.dirichlet_energy() - n)
    }

    /// `H`, `N`, `‖D₊f‖²` and both gradients in one pass over the atoms.
    pub fn evaluate(&self, f: &LatticeField) -> Result<Evaluation> {
        self.check(f)?;
        let f = f.resized(self.radius());
        let v = &self.problem.nonlinearity;
        let mut acc = Accumulator::new();
        let mut dn = LatticeField::zeros(self.radius());
        for (j, &w) in self.weights.iter().enumerate() {
            let u = self.propagator.forward(j, &f);
            let mut inner = Accumulator::new();
            for z in u.values() {
                inner.add(v.v_from_sq(z.norm_sqr()));
            }
            acc.add(w * inner.value());
            let pu = u.map(|z| v.p(z));
            let back = self.propagator.adjoint(j, &pu);
            for (d, b) in dn.values_mut().iter_mut().zip(back.values()) {
                *d += w * b;
            }
        }
        let potential = acc.value();
        let kinetic = f.dirichlet_energy();
        let d = self.problem.d_av;
        let lap = f.laplacian_in_box();
        let gradient = LatticeField::from_fn(self.radius(), |x| -d * lap.get(x) - dn.get(x));
        Ok(Evaluation { energy: 0.5 * d * kinetic - potential, potential, kinetic, gradient, potential_gradient: dn })
    }

    /// Gradient of `H`.
    pub fn gradient(&self, f: &LatticeField) -> Result<LatticeField> {
        Ok(self.evaluate(f)?.gradient)
    }

    /// Gradient of `N`, `Σ_j w_j T_{-r_j}[P(T_{r_j} f)]`.
    pub fn potential_gradient(&self, f: &LatticeField) -> Result<LatticeField> {
        Ok(self.evaluate(f)?.potential_gradient)
    }

    /// `DN(f)[f] = Re⟨∇N, f⟩`.
    pub fn dn_f(&self, f: &LatticeField) -> Result<f64> {
        Ok(self.potential_gradient(f)?.re_inner(f))
    }

    /// `ω = Re⟨g, f⟩ / ‖f‖₂²`.
    pub fn lagrange_multiplier(&self, f: &LatticeField) -> Result<f64> {
        let g = self.gradient(f)?;
        multiplier(&g, f)
    }

    /// `‖g - ωf‖₂ / ‖f‖₂`.
    pub fn el_residual(&self, f: &LatticeField, omega: f64) -> Result<f64> {
        let g = self.gradient(f)?;
        residual(&g, f, omega)
    }
}

/// `Re⟨g, f⟩ / ‖f‖₂²`.
pub fn multiplier(g: &LatticeField, f: &LatticeField) -> Result<f64> {
    let n = f.norm_sq();
    if n == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(g.re_inner(f) / n)
}

/// `‖g - ωf‖₂ / ‖f‖₂`.
pub fn residual(g: &LatticeField, f: &LatticeField, omega: f64) -> Result<f64> {
    let n = f.norm2();
    if n == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(g.add_scaled(num_complex::Complex64::new(-omega, 0.0), f).norm2() / n)
}
