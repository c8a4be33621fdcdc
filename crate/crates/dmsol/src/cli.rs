//! Argument parsing, run orchestration and exit codes.
//!
//! Exit codes: 0 success, 1 numeric failure, 2 usage or configuration
//! error. Output goes to `--out`, else `$DMSOL_OUT_DIR`, else `dmsol-out`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Failures, Initial, Suite};
use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{read_manifest, timestamp, RunManifest, MANIFEST_FILE};
use crate::output::Output;

pub const OUT_DIR_ENV: &str = "DMSOL_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "dmsol-out";

#[derive(Debug, Parser)]
#[command(name = "dmsol", version, about = "Solitons, thresholds and decay rates of the diffraction-managed discrete NLS")]
pub struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, short, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the energy at fixed power and write the ground state.
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        /// Override the power.
        #[arg(long)]
        lambda: Option<f64>,
        /// Override the average diffraction.
        #[arg(long)]
        d_av: Option<f64>,
    },
    /// Energy curve over `[sweep] lambdas` and the subadditivity check.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Quotient maximization, energy sign and the threshold power.
    Threshold {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Tail distribution and decay-rate fits of stored fields.
    Decay {
        #[command(flatten)]
        config: ConfigArg,
        /// Field files (`.txt`, `.bin`) or `solve` output directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Multiplier for plain field files.
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
    },
    /// Randomized checks of identities and inequalities.
    Verify {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Trials per check (default from `[verify] trials`).
        #[arg(long)]
        trials: Option<usize>,
        /// Master seed (default from `[verify] seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Averaged flow from a ground state, then the breather experiment.
    Propagate {
        #[command(flatten)]
        config: ConfigArg,
        /// Start from this field instead of solving first.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Multiplier of `--field`, enabling the stationarity and breather checks.
        #[arg(long, allow_hyphen_values = true, requires = "field")]
        omega: Option<f64>,
    },
    /// Rerun the command recorded in a manifest.
    Replay {
        /// A `manifest.json` or the directory holding it.
        manifest: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Sweep { .. } => "sweep",
            Command::Threshold { .. } => "threshold",
            Command::Decay { .. } => "decay",
            Command::Verify { .. } => "verify",
            Command::Propagate { .. } => "propagate",
            Command::Replay { .. } => "replay",
        }
    }

    fn config_path(&self) -> Option<&Path> {
        match self {
            Command::Solve { config, .. }
            | Command::Sweep { config }
            | Command::Threshold { config }
            | Command::Decay { config, .. }
            | Command::Verify { config, .. }
            | Command::Propagate { config, .. } => config.config.as_deref(),
            Command::Replay { .. } => None,
        }
    }
}

/// Configuration text and where it came from.
struct Source {
    path: Option<String>,
    text: String,
}

fn read_config(cmd: &Command) -> Result<Source, CliError> {
    match cmd.config_path() {
        None => Ok(Source { path: None, text: String::new() }),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Ok(Source { path: Some(p.display().to_string()), text })
        }
    }
}

fn parse_config(source: &Source) -> Result<Config, CliError> {
    Config::parse(&source.text)
        .map_err(|e| CliError::Config { path: source.path.clone().unwrap_or_else(|| "<defaults>".into()), source: e })
}

fn execute(cmd: &Command, cfg: &Config, out: &mut Output) -> Result<Failures, CliError> {
    let mut problem = cfg.problem();
    match cmd {
        Command::Solve { lambda, d_av, .. } => {
            problem.lambda = lambda.unwrap_or(problem.lambda);
            problem.d_av = d_av.unwrap_or(problem.d_av);
            problem.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            commands::solve(cfg, &problem, out)
        }
        Command::Sweep { .. } => commands::sweep(cfg, &problem, out),
        Command::Threshold { .. } => commands::threshold(cfg, &problem, out),
        Command::Decay { inputs, omega, .. } => commands::decay(cfg, inputs, *omega, out),
        Command::Verify { suite, trials, seed, .. } => {
            let trials = trials.unwrap_or(cfg.verify.trials);
            if trials == 0 {
                return Err(CliError::Usage("--trials must be positive".into()));
            }
            commands::verify(&problem, *suite, trials, seed.unwrap_or(cfg.verify.seed), out)
        }
        Command::Propagate { field, omega, .. } => {
            let initial = match field {
                Some(path) => Initial::File { path: path.clone(), omega: *omega },
                None => Initial::Solve,
            };
            commands::propagate(cfg, &problem, initial, out)
        }
        Command::Replay { .. } => unreachable!("replay is resolved before execution"),
    }
}

fn seed_of(cmd: &Command, cfg: &Config) -> u64 {
    match cmd {
        Command::Verify { seed, .. } => seed.unwrap_or(cfg.verify.seed),
        _ => cfg.solver.seed,
    }
}

/// Runs one parsed command and writes its manifest.
fn run_parsed(cli: &Cli, args: Vec<String>, source: Option<Source>) -> Result<bool, CliError> {
    let source = match source {
        Some(s) => s,
        None => read_config(&cli.command)?,
    };
    let cfg = parse_config(&source)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let mut out = Output::create(&dir)?;
    let failures = execute(&cli.command, &cfg, &mut out)?;
    for f in &failures {
        eprintln!("FAIL: {f}");
    }
    let manifest = RunManifest {
        command: cli.command.name().into(),
        args,
        config_path: source.path,
        config: Some(source.text),
        output_dir: dir.display().to_string(),
        seed: seed_of(&cli.command, &cfg),
        timestamp: timestamp(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        outputs: out.written().to_vec(),
        passed: failures.is_empty(),
    };
    out.json(MANIFEST_FILE, &manifest)?;
    Ok(failures.is_empty())
}

fn replay(path: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<bool, CliError> {
    let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let m = read_manifest(&path)?;
    if m.tool_version != env!("CARGO_PKG_VERSION") {
        eprintln!("warning: manifest written by version {}, running {}", m.tool_version, env!("CARGO_PKG_VERSION"));
    }
    let argv = std::iter::once("dmsol".to_string()).chain(m.args.iter().cloned());
    let mut cli = Cli::try_parse_from(argv).map_err(|e| CliError::Input(format!("{}: recorded arguments: {e}", path.display())))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(CliError::Input(format!("{}: a manifest cannot record a replay", path.display())));
    }
    cli.out = Some(out.unwrap_or_else(|| PathBuf::from(&m.output_dir)));
    cli.threads = threads.or(cli.threads);
    let source = Source { path: m.config_path.clone(), text: m.config.clone().unwrap_or_default() };
    run_parsed(&cli, m.args, Some(source))
}

fn dispatch(cli: Cli, args: Vec<String>) -> Result<bool, CliError> {
    match &cli.command {
        Command::Replay { manifest } => replay(manifest, cli.out.clone(), cli.threads),
        _ => run_parsed(&cli, args, None),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli, args)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
