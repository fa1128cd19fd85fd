//! Command-line front end.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
pub use commands::Verdict;
pub use config::ScenarioConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;

/// Scenarios shipped with the binary, addressable by name from `--config`.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("example51-whole", include_str!("../../scenarios/example51-whole.cfg")),
    ("example51-regional", include_str!("../../scenarios/example51-regional.cfg")),
    ("example51-irrational-zone", include_str!("../../scenarios/example51-irrational-zone.cfg")),
    ("example51-decay", include_str!("../../scenarios/example51-decay.cfg")),
    ("example51-heat", include_str!("../../scenarios/example51-heat.cfg")),
    ("example51-low-order", include_str!("../../scenarios/example51-low-order.cfg")),
    ("example52-pointwise", include_str!("../../scenarios/example52-pointwise.cfg")),
    ("example52-multiplicity", include_str!("../../scenarios/example52-multiplicity.cfg")),
];

pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".cfg").unwrap_or(name);
    BUILTIN_SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Strategic,
    Gramian,
    Hum,
}

#[derive(Debug, Parser)]
#[command(name = "fradic", version, about = "Regional controllability of time-fractional diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Mild solution snapshots on a space-time grid.
    Simulate(CommonArgs),
    /// Rank test of the actuator suite.
    Strategic(CommonArgs),
    /// Regional Gramian and its spectrum.
    Gramian(CommonArgs),
    /// Minimum-energy control by the Hilbert uniqueness method.
    Hum(CommonArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the scenario).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Mode truncation N (overrides the scenario).
    #[arg(long)]
    pub modes: Option<usize>,
    /// Regularisation ε (overrides the scenario).
    #[arg(long)]
    pub eps: Option<f64>,
}

impl CommandArgs {
    fn split(&self) -> (Command, &CommonArgs) {
        match self {
            Self::Simulate(a) => (Command::Simulate, a),
            Self::Strategic(a) => (Command::Strategic, a),
            Self::Gramian(a) => (Command::Gramian, a),
            Self::Hum(a) => (Command::Hum, a),
        }
    }
}

/// Reads a scenario from disk, falling back to the bundled scenario of that name.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    if path.exists() {
        return ScenarioConfig::load(path);
    }
    match path.to_str().and_then(builtin_scenario) {
        Some(text) => ScenarioConfig::from_toml(text),
        None => Err(Error::Config(format!("no such scenario file: {}", path.display()))),
    }
}

/// Applies command-line overrides and re-validates.
pub fn apply_overrides(mut cfg: ScenarioConfig, args: &CommonArgs) -> Result<ScenarioConfig> {
    if let Some(n) = args.modes {
        if cfg.system.levels.is_some() {
            return Err(Error::Config("--modes cannot override an explicit level list".into()));
        }
        cfg.system.modes = Some(n);
    }
    if let Some(eps) = args.eps {
        cfg.solver.epsilon = Some(eps);
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(command: Command, cfg: &ScenarioConfig) -> Result<Verdict> {
    let out = cfg.output.dir.as_path();
    match command {
        Command::Simulate => commands::simulate(cfg, out),
        Command::Strategic => commands::strategic(cfg, out),
        Command::Gramian => commands::gramian(cfg, out),
        Command::Hum => commands::hum(cfg, out),
    }
}

pub fn exit_code(result: &Result<Verdict>) -> i32 {
    match result {
        Ok(Verdict::Positive) => EXIT_OK,
        Ok(Verdict::Negative) => EXIT_NEGATIVE,
        Err(Error::NonIntegrable { .. }) => EXIT_UNSUPPORTED,
        Err(_) => EXIT_ERROR,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let (command, common) = cli.command.split();
    let result = load_scenario(&common.config)
        .and_then(|cfg| apply_overrides(cfg, common))
        .and_then(|cfg| execute(command, &cfg));
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}
