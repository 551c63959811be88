//! `slowpush`: scenario runner for impact prediction, dispersion,
//! deflection, damage scoring and propellant budgets.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{Overrides, Resolved};
use crate::output::RunInfo;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing input {file}: run `slowpush {command}` first")]
    MissingInput { file: String, command: &'static str },
    #[error("no impact: {0}")]
    Miss(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Miss(_) => 3,
            CliError::MissingInput { .. } => 4,
        }
    }
}

impl From<slowpush_core::Error> for CliError {
    fn from(e: slowpush_core::Error) -> Self {
        match e {
            slowpush_core::Error::NoImpact { .. } => CliError::Miss(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "slowpush", version, about = "Asteroid impact, dispersion and slow-push deflection scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// `analytic`, `mean_elements` or `table:PATH`.
    #[arg(long)]
    ephemeris: Option<String>,
    /// Deflection durations in months, inclusive range `A..B`.
    #[arg(long)]
    months: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the scenario orbit to Earth contact.
    Propagate(Common),
    /// Scan epoch offsets along the line of variation.
    Risk(Common),
    /// Propagate the rendezvous covariance and project the impact ellipse.
    Dispersion(Common),
    /// Sweep ion-beam thrust durations.
    Deflect(Common),
    /// Score the deflection track against population and nightlight rasters.
    Damage(Common),
    /// Propellant bookkeeping.
    Budget(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Propagate(c) => ("propagate", c),
            Command::Risk(c) => ("risk", c),
            Command::Dispersion(c) => ("dispersion", c),
            Command::Deflect(c) => ("deflect", c),
            Command::Damage(c) => ("damage", c),
            Command::Budget(c) => ("budget", c),
        }
    }
}

fn out_dir(common: &Common, res: Option<&Resolved>) -> PathBuf {
    if let Some(o) = &common.out {
        return o.clone();
    }
    match res.and_then(|r| r.scenario.output_dir.clone().map(|d| (r, d))) {
        Some((r, d)) => r.config_path.parent().unwrap_or(Path::new(".")).join(d),
        None => PathBuf::from("out"),
    }
}

fn run(name: &str, common: &Common, res: &Resolved, dir: &Path) -> Result<commands::Report, CliError> {
    match name {
        "propagate" => commands::propagate_cmd(res),
        "risk" => commands::risk_cmd(res),
        "dispersion" => commands::dispersion_cmd(res),
        "deflect" => commands::deflect_cmd(res),
        "damage" => commands::damage_cmd(res, dir),
        "budget" => commands::budget_cmd(res),
        _ => unreachable!("unknown command {name} with {}", common.config.display()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = cli.command.parts();
    let started = SystemTime::now();
    let timer = Instant::now();
    let threads = common.threads.unwrap_or_else(rayon::current_num_threads);
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let config_bytes = std::fs::read(&common.config).unwrap_or_default();
    let info = RunInfo {
        command: name,
        config_sha256: output::sha256_hex(&config_bytes),
        overrides: json!({ "ephemeris": common.ephemeris, "months": common.months }),
        threads,
        started,
        timer,
    };
    let ov = Overrides {
        ephemeris: common.ephemeris.as_deref(),
        months: common.months.as_deref(),
    };
    let resolved = config::load(&common.config, &ov);
    let dir = out_dir(common, resolved.as_ref().ok());
    let result = resolved.and_then(|res| run(name, common, &res, &dir));
    let (status, code, error, files) = match result {
        Ok(report) => match output::commit(&dir, &report.outputs) {
            Ok(files) => match report.miss {
                None => ("ok", 0u8, None, files),
                Some(m) => ("miss", 3, Some(format!("no impact: {m}")), files),
            },
            Err(e) => ("failed", e.exit_code(), Some(e.to_string()), Vec::new()),
        },
        Err(e) => {
            let status = if matches!(e, CliError::Miss(_)) { "miss" } else { "failed" };
            (status, e.exit_code(), Some(e.to_string()), Vec::new())
        }
    };
    if let Some(e) = &error {
        eprintln!("{status}: {e}");
    }
    if let Err(e) = output::write_manifest(&dir, &info, status, code as i32, error, &files) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
