//! Run configuration: one TOML file per run.
//!
//! Top-level keys describe the problem (`d_av`, `lambda`, the measure and
//! `V`); the tables `[solver]`, `[sweep]`, `[threshold]`, `[decay]`,
//! `[propagate]` and `[verify]` tune the subcommands. Every key is optional
//! and an empty file is the model case: uniform `μ` on `[0, 1]` from
//! `d₀ = ±1`, `V(a) = a⁴/4`, `d_av = 1`, `λ = 4`.

use serde::{Deserialize, Serialize};

use dmsol_core::minimizer::SolveConfig;
use dmsol_core::profile::Potential;
use dmsol_core::propagate::{PropagationConfig, Scheme};
use dmsol_core::{BoxPolicy, DiffractionMeasure, EvolutionKind, EvolutionMethod, Nonlinearity, PiecewiseProfile, Problem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", match line { Some(l) => format!("line {l}: "), None => String::new() })]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Pushforward of the uniform measure on one period of `D(s) = ∫₀ˢ d₀`.
    Profile,
    Dirac,
    /// Uniform on `interval`, by Gauss-Legendre with `quadrature` nodes.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    TaylorScaled,
    ClosedKernel,
    SpectralRing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Strang,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub d_av: f64,
    pub lambda: f64,
    pub measure: MeasureKind,
    pub period: f64,
    /// `[length, value]` pieces of `d₀`.
    pub segments: Vec<[f64; 2]>,
    /// Gauss-Legendre nodes per segment (or on `interval`).
    pub quadrature: usize,
    pub interval: [f64; 2],
    /// `[c, s]` terms of `V(a) = Σ c aˢ`.
    pub terms: Vec<[f64; 2]>,
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub kappa: Option<f64>,
    pub method: MethodName,
    pub series_tolerance: f64,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub threshold: ThresholdSection,
    pub decay: DecaySection,
    pub propagate: PropagateSection,
    pub verify: VerifySection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d_av: 1.0,
            lambda: 4.0,
            measure: MeasureKind::Profile,
            period: 2.0,
            segments: vec![[1.0, 1.0], [1.0, -1.0]],
            quadrature: 16,
            interval: [0.0, 1.0],
            terms: vec![[0.25, 4.0]],
            gamma0: None,
            gamma1: None,
            gamma2: None,
            kappa: None,
            method: MethodName::TaylorScaled,
            series_tolerance: 1e-15,
            solver: SolverSection::default(),
            sweep: SweepSection::default(),
            threshold: ThresholdSection::default(),
            decay: DecaySection::default(),
            propagate: PropagateSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    pub backtrack: f64,
    pub recenter_every: usize,
    pub restarts: usize,
    pub seed: u64,
    pub box_radius: usize,
    pub tail_floor: f64,
    pub max_box_radius: usize,
    pub polish: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolveConfig::default();
        SolverSection {
            max_iters: s.max_iters,
            grad_tol: s.grad_tol,
            step_init: s.step_init,
            backtrack: s.backtrack,
            recenter_every: s.recenter_every,
            restarts: s.restarts,
            seed: s.seed,
            box_radius: s.box_policy.box_radius,
            tail_floor: s.box_policy.tail_floor,
            max_box_radius: s.max_box_radius,
            polish: s.polish,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { lambdas: vec![1.0, 2.0, 4.0, 8.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub lambdas: Vec<f64>,
    /// Largest box for the exponential trial certificate.
    pub certificate_radius: usize,
    /// Relative slack of the scaling and sandwich comparisons.
    pub tolerance: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection { lambdas: vec![0.5, 1.0, 2.0, 4.0], certificate_radius: 400, tolerance: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySection {
    /// Tail values at or below this are excluded from the fits.
    pub floor: f64,
    /// `ν̂` must reach this fraction of `acosh(|ω|/(2d_av) + 1)`.
    pub rate_fraction: f64,
    pub theta: f64,
    pub alpha: f64,
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection { floor: dmsol_core::decay::DEFAULT_FLOOR, rate_fraction: 0.95, theta: 1.5, alpha: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagateSection {
    pub scheme: SchemeName,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    /// Keep a snapshot every this many steps (0 keeps none).
    pub snapshot_every: usize,
    /// Largest admissible `max_t ‖|v(t)| - |v(0)|‖₂ / ‖v(0)‖₂`.
    pub max_deviation: f64,
    /// Fast-scale parameters of the breather experiment; empty skips it.
    pub epsilons: Vec<f64>,
    pub steps_per_fast_unit: usize,
    pub pad: usize,
}

impl Default for PropagateSection {
    fn default() -> Self {
        PropagateSection {
            scheme: SchemeName::Rk4,
            dt: 0.02,
            t_end: 10.0,
            sample_every: 5,
            snapshot_every: 100,
            max_deviation: 1e-6,
            epsilons: vec![0.2, 0.1, 0.05],
            steps_per_fast_unit: 20,
            pad: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub seed: u64,
    pub trials: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { seed: 1, trials: 20 }
    }
}

/// 1-based line of `key` inside `[section]` (top level for `None`).
pub fn key_line(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.split(']').next()) {
            current = Some(name.trim().to_string());
            continue;
        }
        let here = current.as_deref() == section;
        if here && t.split('=').next().is_some_and(|k| k.trim() == key) && t.contains('=') {
            return Some(i + 1);
        }
    }
    None
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    fn at(text: &str, section: Option<&str>, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { line: key_line(text, section, key), message: message.into() }
    }

    /// Builds every derived object once so that errors point at their key.
    fn validate(&self, text: &str) -> Result<(), ConfigError> {
        self.problem_at(text)?;
        self.solve_config().map_err(|e| Self::at(text, Some("solver"), solver_key(&e), e.to_string()))?;
        let lambdas_ok = |l: &[f64]| !l.is_empty() && l[0] > 0.0 && l.windows(2).all(|w| w[1] > w[0]) && l.iter().all(|x| x.is_finite());
        if !lambdas_ok(&self.sweep.lambdas) {
            return Err(Self::at(text, Some("sweep"), "lambdas", "lambdas must be positive, finite and increasing"));
        }
        if !lambdas_ok(&self.threshold.lambdas) {
            return Err(Self::at(text, Some("threshold"), "lambdas", "lambdas must be positive, finite and increasing"));
        }
        if !(self.threshold.tolerance >= 0.0) {
            return Err(Self::at(text, Some("threshold"), "tolerance", "tolerance must be nonnegative"));
        }
        let d = &self.decay;
        if !(d.floor > 0.0) {
            return Err(Self::at(text, Some("decay"), "floor", "floor must be positive"));
        }
        if !(d.rate_fraction > 0.0 && d.rate_fraction <= 1.0) {
            return Err(Self::at(text, Some("decay"), "rate_fraction", "rate_fraction must lie in (0, 1]"));
        }
        if !(d.theta > 1.0) {
            return Err(Self::at(text, Some("decay"), "theta", "theta must exceed 1"));
        }
        if !(d.alpha > 0.0 && d.alpha < 0.5) {
            return Err(Self::at(text, Some("decay"), "alpha", "alpha must lie in (0, 1/2)"));
        }
        let p = &self.propagate;
        self.propagation_config().validate().map_err(|e| Self::at(text, Some("propagate"), "dt", e.to_string()))?;
        if p.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Self::at(text, Some("propagate"), "epsilons", "epsilons must be positive"));
        }
        if p.steps_per_fast_unit == 0 {
            return Err(Self::at(text, Some("propagate"), "steps_per_fast_unit", "steps_per_fast_unit must be positive"));
        }
        if !(p.max_deviation > 0.0) {
            return Err(Self::at(text, Some("propagate"), "max_deviation", "max_deviation must be positive"));
        }
        if self.verify.trials == 0 {
            return Err(Self::at(text, Some("verify"), "trials", "trials must be positive"));
        }
        Ok(())
    }

    fn problem_at(&self, text: &str) -> Result<Problem, ConfigError> {
        let measure = self.measure().map_err(|e| {
            let key = match self.measure {
                MeasureKind::Profile => "segments",
                MeasureKind::Uniform => "interval",
                MeasureKind::Dirac => "measure",
            };
            Self::at(text, None, key, e.to_string())
        })?;
        let nonlinearity = self.nonlinearity().map_err(|e| {
            let key = ["gamma0", "gamma1", "gamma2", "kappa"].into_iter().find(|k| key_line(text, None, k).is_some()).unwrap_or("terms");
            Self::at(text, None, key, e.to_string())
        })?;
        let mut problem = Problem::new(self.d_av, measure, nonlinearity, self.lambda).map_err(|e| {
            let key = if self.d_av >= 0.0 && self.d_av.is_finite() { "lambda" } else { "d_av" };
            Self::at(text, None, key, e.to_string())
        })?;
        problem.method = self.method();
        problem.validate().map_err(|e| Self::at(text, None, "series_tolerance", e.to_string()))?;
        Ok(problem)
    }

    pub fn profile(&self) -> dmsol_core::Result<PiecewiseProfile> {
        PiecewiseProfile::new(self.period, self.segments.iter().map(|s| (s[0], s[1])).collect(), true)
    }

    pub fn measure(&self) -> dmsol_core::Result<DiffractionMeasure> {
        match self.measure {
            MeasureKind::Profile => DiffractionMeasure::from_profile(&self.profile()?, self.quadrature),
            MeasureKind::Dirac => Ok(DiffractionMeasure::dirac()),
            MeasureKind::Uniform => DiffractionMeasure::uniform(self.interval[0], self.interval[1], self.quadrature),
        }
    }

    /// Exponent parameters are read off the terms unless all of
    /// `gamma0`, `gamma1`, `gamma2` are given.
    pub fn nonlinearity(&self) -> dmsol_core::Result<Nonlinearity> {
        let terms: Vec<(f64, f64)> = self.terms.iter().map(|t| (t[0], t[1])).collect();
        match (self.gamma0, self.gamma1, self.gamma2) {
            (Some(g0), Some(g1), Some(g2)) => Nonlinearity::new(Potential::PowerSum(terms), g0, g1, g2, self.kappa),
            (None, None, None) if self.kappa.is_none() => Nonlinearity::power_sum(terms),
            _ => Err(dmsol_core::Error::InvalidNonlinearity("give all of gamma0, gamma1, gamma2 (and optionally kappa) or none".into())),
        }
    }

    pub fn method(&self) -> EvolutionMethod {
        let kind = match self.method {
            MethodName::TaylorScaled => EvolutionKind::TaylorScaled,
            MethodName::ClosedKernel => EvolutionKind::ClosedKernel,
            MethodName::SpectralRing => EvolutionKind::SpectralRing,
        };
        EvolutionMethod { kind, series_tolerance: self.series_tolerance, margin: None }
    }

    /// The problem; only valid on a parsed configuration.
    pub fn problem(&self) -> Problem {
        let mut p = Problem::new(self.d_av, self.measure().expect("validated"), self.nonlinearity().expect("validated"), self.lambda)
            .expect("validated");
        p.method = self.method();
        p
    }

    pub fn solve_config(&self) -> dmsol_core::Result<SolveConfig> {
        let s = &self.solver;
        let cfg = SolveConfig {
            max_iters: s.max_iters,
            grad_tol: s.grad_tol,
            step_init: s.step_init,
            backtrack: s.backtrack,
            recenter_every: s.recenter_every,
            restarts: s.restarts,
            seed: s.seed,
            box_policy: BoxPolicy::new(s.box_radius, s.tail_floor)?,
            max_box_radius: s.max_box_radius,
            polish: s.polish,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn propagation_config(&self) -> PropagationConfig {
        let p = &self.propagate;
        PropagationConfig {
            dt: p.dt,
            t_end: p.t_end,
            epsilon: p.epsilons.first().copied().unwrap_or(0.1),
            scheme: match p.scheme {
                SchemeName::Strang => Scheme::Strang,
                SchemeName::Rk4 => Scheme::Rk4,
            },
            profile: self.profile().unwrap_or_else(|_| PiecewiseProfile::model()),
            sample_every: p.sample_every,
        }
    }
}

/// Best guess at the `[solver]` key behind a validation error.
fn solver_key(e: &dmsol_core::Error) -> &'static str {
    let m = e.to_string();
    ["max_box_radius", "max_iters", "grad_tol", "step_init", "backtrack", "tail_floor", "box_radius"]
        .into_iter()
        .find(|k| m.contains(k.replace('_', " ").as_str()) || m.contains(k))
        .unwrap_or("max_iters")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_model_case() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        let p = c.problem();
        assert_eq!(p.d_av, 1.0);
        assert!((p.measure.total_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = Config::parse("d_av = 1.0\n\n[solver]\nmax_iter = 3\n").unwrap_err();
        assert_eq!(e.line, Some(4), "{e}");
    }

    #[test]
    fn semantic_error_reports_line() {
        let e = Config::parse("lambda = 2.0\nsegments = [[1.0, 1.0], [0.5, -1.0]]\n").unwrap_err();
        assert_eq!(e.line, Some(2), "{e}");
        let e = Config::parse("[solver]\nbacktrack = 2.0\n").unwrap_err();
        assert_eq!(e.line, Some(2), "{e}");
    }

    #[test]
    fn key_lookup_respects_tables() {
        let t = "seed = 1\n[verify]\nseed = 2\n";
        assert_eq!(key_line(t, Some("verify"), "seed"), Some(3));
        assert_eq!(key_line(t, None, "seed"), Some(1));
    }
}
