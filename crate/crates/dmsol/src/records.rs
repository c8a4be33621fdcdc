//! Rows and documents written by the subcommands. Non-finite numbers are
//! written as `null`.

use serde::{Deserialize, Serialize};

use dmsol_core::minimizer::{CurveViolation, SolveStatus, StartKind};
use dmsol_core::verify::EstimateReport;

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max_iterations",
        SolveStatus::NoNegativeEnergy => "no_negative_energy",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartRecord {
    pub start: String,
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl StartRecord {
    pub fn new(s: &dmsol_core::minimizer::StartOutcome) -> Self {
        let start = match s.start {
            StartKind::SingleSite => "single_site".to_string(),
            StartKind::ExpProfile(nu) => format!("exp_profile:{nu}"),
            StartKind::Random(seed) => format!("random:{seed}"),
        };
        StartRecord { start, energy: finite(s.energy), residual: finite(s.residual), iterations: s.iterations, converged: s.converged }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRecord {
    pub lambda: f64,
    pub d_av: f64,
    pub energy: Option<f64>,
    pub omega: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub status: String,
    pub box_radius: usize,
    pub initial_energy: Option<f64>,
    pub field_text: String,
    pub field_binary: String,
    pub starts: Vec<StartRecord>,
    /// Failed checks on the result; empty when it passed.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub energy: Option<f64>,
    pub gradient_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub lambda: f64,
    pub energy: Option<f64>,
    pub omega: Option<f64>,
    pub residual: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessRecord {
    pub seed: u64,
    pub trial: usize,
    pub trial_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetailRecord {
    pub name: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRecord {
    pub id: String,
    pub trials: usize,
    pub worst_ratio: Option<f64>,
    pub identity_error: Option<f64>,
    pub pass: bool,
    pub witness: Option<WitnessRecord>,
    pub details: Vec<DetailRecord>,
}

impl From<&EstimateReport> for EstimateRecord {
    fn from(r: &EstimateReport) -> Self {
        EstimateRecord {
            id: r.id.clone(),
            trials: r.trials,
            worst_ratio: finite(r.worst_ratio),
            identity_error: finite(r.identity_error),
            pass: r.pass,
            witness: r.witness.map(|w| WitnessRecord { seed: w.seed, trial: w.trial, trial_seed: w.trial_seed() }),
            details: r.details.iter().map(|(name, v)| DetailRecord { name: name.clone(), value: finite(*v) }).collect(),
        }
    }
}

pub fn violation_text(v: &CurveViolation) -> String {
    match v {
        CurveViolation::Positive { lambda, energy } => format!("E({lambda}) = {energy:e} is positive"),
        CurveViolation::Increasing { lambda_lo, lambda_hi, rise } => {
            format!("E increases by {rise:e} from lambda {lambda_lo} to {lambda_hi}")
        }
        CurveViolation::NotStrictlySubadditive { lambda1, lambda2, gap } => {
            format!("E({lambda1}) + E({lambda2}) - E({}) = {gap:e} is not positive", lambda1 + lambda2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubadditivityRecord {
    pub report: EstimateRecord,
    pub curve_violations: Vec<String>,
    /// Grid points where the solver failed, as `lambda: message`.
    pub solver_failures: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub lambda: f64,
    pub r_hat: Option<f64>,
    pub e_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectionRecord {
    pub lambda: f64,
    pub energy: Option<f64>,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichRecord {
    pub lambda0: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRecord {
    pub d_av: f64,
    pub gamma0: f64,
    pub lambda_cr_hat: Option<f64>,
    pub within_grid: bool,
    /// `R̂(λ)/λ^{(γ-2)/2}` averaged over the grid, pure powers only.
    pub r0_hat: Option<f64>,
    /// `(d_av/(2R̂₀))^{2/(γ-2)}`, pure powers with `d_av > 0` only.
    pub lambda_cr_predicted: Option<f64>,
    pub scaling_pairs: usize,
    pub scaling_worst_ratio: Option<f64>,
    pub scaling_pass: bool,
    pub sandwich: Vec<SandwichRecord>,
    pub sandwich_pass: bool,
    pub bisection: Vec<BisectionRecord>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub n: usize,
    pub beta: f64,
    pub in_window: bool,
    /// `exp(-(a + ν̂ n))` from the exponential fit.
    pub exp_model: Option<f64>,
    /// `exp(-(a + ν̂** (n+1)ln(n+1)))` from the super-exponential fit.
    pub superexp_model: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfConsistencyRecord {
    pub range: usize,
    pub c_star: Option<f64>,
    pub c_star_doubled: Option<f64>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayFieldRecord {
    pub input: String,
    pub tail_csv: String,
    pub window: [usize; 2],
    pub nu_hat: Option<f64>,
    pub nu2_hat: Option<f64>,
    pub exp_rms: Option<f64>,
    pub superexp_rms: Option<f64>,
    pub d_av: f64,
    pub omega: Option<f64>,
    /// `acosh(|ω|/(2d_av) + 1)` when `ω` is known and `d_av > 0`.
    pub heuristic_rate: Option<f64>,
    pub self_consistency: Option<SelfConsistencyRecord>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayRecord {
    pub floor: f64,
    pub fields: Vec<DecayFieldRecord>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyEntry {
    pub file: String,
    pub id: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyRecord {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub reports: Vec<VerifyEntry>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    #[serde(rename = "H")]
    pub energy: Option<f64>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub index: usize,
    pub t: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreatherRow {
    pub epsilon: f64,
    pub dev: Option<f64>,
    pub steps: usize,
    pub norm_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreatherRecord {
    pub slow_period: f64,
    pub decreasing: bool,
    /// Failed runs, as `epsilon: message`.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateRecord {
    pub initial: String,
    pub omega: Option<f64>,
    pub radius: usize,
    pub scheme: String,
    pub dt: f64,
    pub t_end: f64,
    pub max_deviation: f64,
    pub deviation_checked: bool,
    pub max_norm_drift: f64,
    pub max_energy_drift: Option<f64>,
    pub breather: Option<BreatherRecord>,
    pub failures: Vec<String>,
    pub pass: bool,
}
