//! One function per subcommand. Each writes its files through [`Output`]
//! and returns the list of failed checks; an empty list means success.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use dmsol_core::decay::{analyze, heuristic_rate, self_consistency_check};
use dmsol_core::minimizer::{curve_violations, minimize, CurvePoint, EnergyCurve, SolveResult, SolveStatus};
use dmsol_core::profile::Potential;
use dmsol_core::propagate::{breather_experiment, run_averaged, Scheme};
use dmsol_core::threshold::{energy_upper_bound, pure_power_threshold, r_quotient_max, scaling_checks, threshold_from_grid};
use dmsol_core::verify::{
    bilinear_check, closed_form_check, evolution_bounds_check, functional_inequalities_check, ims_check, splitting_check,
    subadditivity_check, EstimateReport,
};
use dmsol_core::{LatticeField, Problem};

use crate::config::Config;
use crate::error::CliError;
use crate::io;
use crate::output::Output;
use crate::records::*;

pub type Failures = Vec<String>;

/// Energies at or below this count as negative for the multiplier check.
const NEGATIVE_ENERGY: f64 = -1e-8;
/// Largest admissible Euler-Lagrange residual of a negative-energy solution.
const RESIDUAL_LIMIT: f64 = 1e-8;

fn solve_failures(r: &SolveResult) -> Failures {
    let mut out = Vec::new();
    if r.status == SolveStatus::MaxIterations {
        out.push(format!("solver stopped after {} iterations, residual {:e}", r.iterations, r.residual));
    }
    if r.energy < NEGATIVE_ENERGY {
        let q = 2.0 * r.energy / r.lambda;
        if !(r.omega < q && q < 0.0) {
            out.push(format!("multiplier ordering omega < 2E/lambda < 0 fails: omega = {:e}, 2E/lambda = {q:e}", r.omega));
        }
        if !(r.residual < RESIDUAL_LIMIT) {
            out.push(format!("Euler-Lagrange residual {:e} not below {RESIDUAL_LIMIT:e}", r.residual));
        }
    }
    out
}

pub fn solve(cfg: &Config, problem: &Problem, out: &mut Output) -> Result<Failures, CliError> {
    let scfg = cfg.solve_config()?;
    let r = minimize(problem, &scfg)?;
    out.field("field.txt", &r.field)?;
    out.field("field.bin", &r.field)?;
    let history: Vec<HistoryRow> = r
        .history
        .iter()
        .enumerate()
        .map(|(i, &(e, g))| HistoryRow { iteration: i + 1, energy: finite(e), gradient_norm: finite(g) })
        .collect();
    out.csv("history.csv", &history)?;
    let failures = solve_failures(&r);
    let record = SolveRecord {
        lambda: r.lambda,
        d_av: r.d_av,
        energy: finite(r.energy),
        omega: finite(r.omega),
        residual: finite(r.residual),
        iterations: r.iterations,
        converged: r.converged,
        status: status_name(r.status).into(),
        box_radius: r.field.radius(),
        initial_energy: finite(r.initial_energy),
        field_text: "field.txt".into(),
        field_binary: "field.bin".into(),
        starts: r.starts.iter().map(StartRecord::new).collect(),
        failures: failures.clone(),
    };
    out.json("solve.json", &record)?;
    println!("E = {:e}, omega = {:e}, residual = {:e}, status {}", r.energy, r.omega, r.residual, status_name(r.status));
    Ok(failures)
}

pub fn sweep(cfg: &Config, problem: &Problem, out: &mut Output) -> Result<Failures, CliError> {
    let scfg = cfg.solve_config()?;
    let lambdas = &cfg.sweep.lambdas;
    let results: Vec<_> = lambdas.par_iter().map(|&l| minimize(&problem.with_lambda(l), &scfg)).collect();
    let mut points = Vec::new();
    let mut solver_failures = Vec::new();
    for (&lambda, r) in lambdas.iter().zip(results) {
        match r {
            Ok(r) => points.push(CurvePoint { lambda, energy: r.energy, omega: r.omega, residual: r.residual, status: r.status }),
            Err(e) => solver_failures.push(format!("{lambda}: {e}")),
        }
    }
    let violations = curve_violations(&points);
    let rows: Vec<CurveRow> = points
        .iter()
        .map(|p| CurveRow {
            lambda: p.lambda,
            energy: finite(p.energy),
            omega: finite(p.omega),
            residual: finite(p.residual),
            status: status_name(p.status).into(),
        })
        .collect();
    out.csv("energy_curve.csv", &rows)?;
    let curve = EnergyCurve { points, violations, failures: Vec::new() };
    let report = subadditivity_check(&curve, problem.nonlinearity.gamma0());
    let curve_violations: Vec<String> = curve.violations.iter().map(violation_text).collect();
    let pass = report.pass && curve_violations.is_empty() && solver_failures.is_empty();
    let record = SubadditivityRecord { report: (&report).into(), curve_violations, solver_failures, pass };
    out.json("subadditivity.json", &record)?;
    let mut failures: Failures = record.curve_violations.clone();
    failures.extend(record.solver_failures.iter().map(|f| format!("solver failed at lambda {f}")));
    if !report.pass {
        failures.push(format!("subadditivity bound: worst ratio {:e}", report.worst_ratio));
    }
    for r in &rows {
        println!("lambda = {}  E = {:?}  omega = {:?}  {}", r.lambda, r.energy, r.omega, r.status);
    }
    Ok(failures)
}

fn pure_power_exponent(problem: &Problem) -> Option<f64> {
    match problem.nonlinearity.potential() {
        Potential::PowerSum(t) if t.len() == 1 => Some(t[0].1),
        _ => None,
    }
}

pub fn threshold(cfg: &Config, problem: &Problem, out: &mut Output) -> Result<Failures, CliError> {
    let scfg = cfg.solve_config()?;
    let t = &cfg.threshold;
    let lambdas = &t.lambdas;
    let grid: Vec<dmsol_core::Result<(f64, f64)>> = lambdas
        .par_iter()
        .map(|&l| {
            let r = r_quotient_max(problem, l, &scfg)?.r_hat;
            let e = energy_upper_bound(&problem.with_lambda(l), &scfg, t.certificate_radius)?;
            Ok((r, e))
        })
        .collect();
    let grid: Vec<(f64, f64)> = grid.into_iter().collect::<dmsol_core::Result<_>>()?;
    let (r_hat, e_lambda): (Vec<f64>, Vec<f64>) = grid.iter().copied().unzip();
    let rows: Vec<ThresholdRow> = lambdas
        .iter()
        .zip(&grid)
        .map(|(&lambda, &(r, e))| ThresholdRow { lambda, r_hat: finite(r), e_lambda: finite(e) })
        .collect();
    out.csv("threshold.csv", &rows)?;

    let rep = threshold_from_grid(problem, lambdas, r_hat.clone(), e_lambda, &scfg, t.certificate_radius)?;
    let gamma0 = problem.nonlinearity.gamma0();
    let samples: Vec<(f64, f64)> = lambdas.iter().copied().zip(r_hat).collect();
    // a threshold at 0 has no sandwich to check
    let sandwich_input = rep.lambda_cr_hat.filter(|&l| l > 0.0).map(|l| (l, problem.d_av));
    let scaling = if samples.iter().filter(|s| s.1 > 0.0).count() >= 2 {
        Some(scaling_checks(&samples, gamma0, t.tolerance, sandwich_input)?)
    } else {
        None
    };
    let predicted = match (pure_power_exponent(problem), rep.r0_hat) {
        (Some(g), Some(r0)) if problem.d_av > 0.0 && r0 > 0.0 => finite(pure_power_threshold(problem.d_av, r0, g)),
        _ => None,
    };
    let mut failures = Vec::new();
    if let Some(s) = &scaling {
        if !s.scaling_pass {
            failures.push(format!("quotient scaling violated: worst ratio {:e}", s.worst_ratio));
        }
        if !s.sandwich_pass {
            failures.push("threshold estimate outside the sandwich bounds".into());
        }
    }
    let record = ThresholdRecord {
        d_av: problem.d_av,
        gamma0,
        lambda_cr_hat: rep.lambda_cr_hat.and_then(finite),
        within_grid: rep.within_grid,
        r0_hat: rep.r0_hat.and_then(finite),
        lambda_cr_predicted: predicted,
        scaling_pairs: scaling.as_ref().map_or(0, |s| s.pairs),
        scaling_worst_ratio: scaling.as_ref().and_then(|s| finite(s.worst_ratio)),
        scaling_pass: scaling.as_ref().is_none_or(|s| s.scaling_pass),
        sandwich: scaling
            .as_ref()
            .map(|s| s.sandwich.iter().map(|&(lambda0, lo, hi)| SandwichRecord { lambda0, lower: finite(lo), upper: finite(hi) }).collect())
            .unwrap_or_default(),
        sandwich_pass: scaling.as_ref().is_none_or(|s| s.sandwich_pass),
        bisection: rep.trace.iter().map(|b| BisectionRecord { lambda: b.lambda, energy: finite(b.energy), negative: b.negative }).collect(),
        pass: failures.is_empty(),
    };
    out.json("threshold.json", &record)?;
    println!("lambda_cr_hat = {:?}, predicted = {:?}", record.lambda_cr_hat, record.lambda_cr_predicted);
    Ok(failures)
}

/// A field file, or a `solve` output directory supplying `ω` and `d_av`.
struct DecayInput {
    name: String,
    field: LatticeField,
    omega: Option<f64>,
    d_av: f64,
}

fn load_decay_input(path: &Path, omega: Option<f64>, d_av: f64) -> Result<DecayInput, CliError> {
    let name = path.display().to_string();
    if path.is_dir() {
        let solve = path.join("solve.json");
        let text = std::fs::read_to_string(&solve).map_err(|e| CliError::Input(format!("{}: {e}", solve.display())))?;
        let rec: SolveRecord =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: line {}: {e}", solve.display(), e.line())))?;
        let field = io::read_field(&path.join(&rec.field_binary))?;
        return Ok(DecayInput { name, field, omega: omega.or(rec.omega), d_av: rec.d_av });
    }
    if !path.exists() {
        return Err(CliError::Input(name));
    }
    Ok(DecayInput { name, field: io::read_field(path)?, omega, d_av })
}

pub fn decay(cfg: &Config, inputs: &[PathBuf], omega: Option<f64>, out: &mut Output) -> Result<Failures, CliError> {
    let d = &cfg.decay;
    let loaded: Vec<DecayInput> = inputs.iter().map(|p| load_decay_input(p, omega, cfg.d_av)).collect::<Result<_, _>>()?;
    let mut fields = Vec::new();
    let mut failures = Vec::new();
    for (i, input) in loaded.iter().enumerate() {
        let stats = analyze(&input.field, d.floor)?;
        let (lo, hi) = stats.window;
        let (e, s) = (stats.exp_fit, stats.superexp_fit);
        let rows: Vec<TailRow> = stats
            .beta
            .iter()
            .enumerate()
            .map(|(n, &beta)| {
                let x = n as f64;
                TailRow {
                    n,
                    beta,
                    in_window: (lo..=hi).contains(&n),
                    exp_model: finite((-(e.intercept + e.slope * x)).exp()),
                    superexp_model: finite((-(s.intercept + s.slope * (x + 1.0) * (x + 1.0).ln())).exp()),
                }
            })
            .collect();
        let tail_csv = format!("tail_{i:03}.csv");
        out.csv(&tail_csv, &rows)?;

        let mut own = Vec::new();
        let heuristic = match input.omega {
            Some(w) if input.d_av > 0.0 && w < 0.0 => Some(heuristic_rate(w, input.d_av)?),
            _ => None,
        };
        if let Some(h) = heuristic {
            if !(stats.nu_hat() >= d.rate_fraction * h) {
                own.push(format!("{}: fitted rate {:e} below {} x acosh(|omega|/(2 d_av) + 1) = {:e}", input.name, stats.nu_hat(), d.rate_fraction, h));
            }
        }
        let sc = self_consistency_check(&stats.beta, d.theta, d.alpha, d.floor).ok();
        if input.d_av == 0.0 {
            if let Some(sc) = &sc {
                if !sc.stable {
                    own.push(format!("{}: self-consistency constant grew from {:e} to {:e}", input.name, sc.c_star, sc.c_star_doubled));
                }
            }
        }
        failures.extend(own.iter().cloned());
        println!("{}: nu_hat = {:e}, nu2_hat = {:e}, heuristic = {:?}", input.name, stats.nu_hat(), stats.nu2_hat(), heuristic);
        fields.push(DecayFieldRecord {
            input: input.name.clone(),
            tail_csv,
            window: [lo, hi],
            nu_hat: finite(stats.nu_hat()),
            nu2_hat: finite(stats.nu2_hat()),
            exp_rms: finite(e.rms),
            superexp_rms: finite(s.rms),
            d_av: input.d_av,
            omega: input.omega.and_then(finite),
            heuristic_rate: heuristic.and_then(finite),
            self_consistency: sc.map(|c| SelfConsistencyRecord {
                range: c.range,
                c_star: finite(c.c_star),
                c_star_doubled: finite(c.c_star_doubled),
                stable: c.stable,
            }),
            failures: own,
        });
    }
    out.json("decay.json", &DecayRecord { floor: d.floor, fields, pass: failures.is_empty() })?;
    Ok(failures)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Inequalities,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Inequalities => "inequalities",
            Suite::All => "all",
        }
    }
}

type Check<'a> = (String, Box<dyn Fn() -> dmsol_core::Result<EstimateReport> + Send + Sync + 'a>);

const BILINEAR_WIDTHS: [f64; 3] = [0.25, 0.5, 1.0];
const BILINEAR_SEPARATIONS: [usize; 5] = [0, 4, 8, 16, 32];
const SPLITTING_SEPARATIONS: [usize; 5] = [2, 4, 8, 16, 24];
const SPLITTING_ALPHA: f64 = 0.25;

pub fn verify(problem: &Problem, suite: Suite, trials: usize, seed: u64, out: &mut Output) -> Result<Failures, CliError> {
    let mut checks: Vec<Check<'_>> = Vec::new();
    if suite != Suite::Inequalities {
        checks.push(("ims.json".into(), Box::new(move || Ok(ims_check(trials, seed)))));
        checks.push(("closed_forms.json".into(), Box::new(closed_form_check)));
        checks.push(("evolution_bounds.json".into(), Box::new(move || evolution_bounds_check(trials, seed))));
    }
    if suite != Suite::Identities {
        for b in BILINEAR_WIDTHS {
            checks.push((format!("bilinear_b{b}.json"), Box::new(move || bilinear_check(trials, seed, b, &BILINEAR_SEPARATIONS))));
        }
        checks.push(("functional_inequalities.json".into(), Box::new(move || functional_inequalities_check(trials, seed))));
        checks.push((
            "splitting.json".into(),
            Box::new(move || splitting_check(trials, seed, problem, &SPLITTING_SEPARATIONS, SPLITTING_ALPHA)),
        ));
    }
    let reports: Vec<dmsol_core::Result<EstimateReport>> = checks.par_iter().map(|(_, run)| run()).collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for ((file, _), report) in checks.iter().zip(reports) {
        let report = report?;
        let record = EstimateRecord::from(&report);
        out.json(file, &record)?;
        println!(
            "{:<26} {}  worst ratio {:e}  identity error {:e}",
            file.trim_end_matches(".json"),
            if report.pass { "PASS" } else { "FAIL" },
            report.worst_ratio,
            report.identity_error
        );
        if !report.pass {
            let w = report.witness.map(|w| format!(" (seed {}, trial {})", w.seed, w.trial)).unwrap_or_default();
            failures.push(format!("{}: worst ratio {:e}, identity error {:e}{w}", file, report.worst_ratio, report.identity_error));
        }
        entries.push(VerifyEntry { file: file.clone(), id: report.id, pass: report.pass });
    }
    let record = VerifyRecord { suite: suite.name().into(), seed, trials, reports: entries, pass: failures.is_empty() };
    out.json("verify.json", &record)?;
    Ok(failures)
}

/// Initial field for `propagate`: a file with an optional `ω`, or a fresh solve.
pub enum Initial {
    File { path: PathBuf, omega: Option<f64> },
    Solve,
}

pub fn propagate(cfg: &Config, problem: &Problem, initial: Initial, out: &mut Output) -> Result<Failures, CliError> {
    let p = &cfg.propagate;
    let pcfg = cfg.propagation_config();
    let mut failures = Vec::new();
    let (name, phi, omega) = match initial {
        Initial::File { path, omega } => {
            if !path.exists() {
                return Err(CliError::Input(path.display().to_string()));
            }
            (path.display().to_string(), io::read_field(&path)?, omega)
        }
        Initial::Solve => {
            let r = minimize(problem, &cfg.solve_config()?)?;
            failures.extend(solve_failures(&r));
            out.field("initial.txt", &r.field)?;
            out.field("initial.bin", &r.field)?;
            ("solve".to_string(), r.field, Some(r.omega))
        }
    };
    let radius = phi.radius();
    let tr = run_averaged(problem, &phi, radius, &pcfg, p.snapshot_every)?;
    let rows: Vec<TrajectoryRow> =
        tr.samples.iter().map(|s| TrajectoryRow { t: s.t, norm: s.norm, energy: finite(s.energy), deviation: s.deviation }).collect();
    out.csv("trajectory.csv", &rows)?;
    let mut snaps = Vec::new();
    for (index, (t, f)) in tr.snapshots.iter().enumerate() {
        let file = format!("snapshots/snapshot_{index:05}.txt");
        out.field(&file, f)?;
        snaps.push(SnapshotRow { index, t: *t, file });
    }
    if !snaps.is_empty() {
        out.csv("snapshots.csv", &snaps)?;
    }
    let n0 = tr.samples[0].norm;
    let h0 = tr.samples[0].energy;
    let max_norm_drift = tr.samples.iter().map(|s| (s.norm - n0).abs() / n0).fold(0.0, f64::max);
    let max_energy_drift = tr.samples.iter().map(|s| (s.energy - h0).abs() / h0.abs().max(1.0)).fold(0.0, f64::max);
    let max_deviation = tr.max_deviation();
    // a stationary start should keep its amplitude
    let deviation_checked = omega.is_some();
    if deviation_checked && !(max_deviation <= p.max_deviation) {
        failures.push(format!("amplitude deviation {max_deviation:e} exceeds {:e}", p.max_deviation));
    }
    println!("averaged flow: max deviation {max_deviation:e}, norm drift {max_norm_drift:e}, H drift {max_energy_drift:e}");

    let mut breather = None;
    match omega {
        Some(w) if w < 0.0 && !p.epsilons.is_empty() => {
            let parts: Vec<dmsol_core::Result<_>> = p
                .epsilons
                .par_iter()
                .map(|&eps| breather_experiment(problem, &phi, w, &pcfg, &[eps], p.steps_per_fast_unit, p.pad))
                .collect();
            let mut rows = Vec::new();
            let mut run_failures = Vec::new();
            let mut slow_period = 0.0;
            for part in parts {
                let part = part?;
                slow_period = part.slow_period;
                rows.extend(part.rows);
                run_failures.extend(part.failures.iter().map(|(e, m)| format!("{e}: {m}")));
            }
            let devs: Vec<Option<f64>> = rows.iter().map(|r| r.dev).collect();
            let decreasing = devs.iter().all(Option::is_some) && devs.windows(2).all(|d| d[1] < d[0]);
            let csv_rows: Vec<BreatherRow> = rows
                .iter()
                .map(|r| BreatherRow { epsilon: r.epsilon, dev: r.dev.and_then(finite), steps: r.steps, norm_drift: finite(r.norm_drift) })
                .collect();
            out.csv("breather.csv", &csv_rows)?;
            for r in &csv_rows {
                println!("epsilon = {}  dev = {:?}", r.epsilon, r.dev);
            }
            if !decreasing {
                failures.push("breather deviation does not decrease with epsilon".into());
            }
            failures.extend(run_failures.iter().map(|f| format!("breather run failed at epsilon {f}")));
            breather = Some(BreatherRecord { slow_period, decreasing, failures: run_failures });
        }
        _ => {}
    }
    let record = PropagateRecord {
        initial: name,
        omega: omega.and_then(finite),
        radius,
        scheme: match pcfg.scheme {
            Scheme::Strang => "strang".into(),
            Scheme::Rk4 => "rk4".into(),
        },
        dt: pcfg.dt,
        t_end: pcfg.t_end,
        max_deviation,
        deviation_checked,
        max_norm_drift,
        max_energy_drift: finite(max_energy_drift),
        breather,
        failures: failures.clone(),
        pass: failures.is_empty(),
    };
    out.json("propagate.json", &record)?;
    Ok(failures)
}
