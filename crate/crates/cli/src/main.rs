//! `gridguard`: the detection pipeline as subcommands.
//!
//! Exit codes: 0 success, 1 internal error, 2 user or input error.

mod commands;
mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use gridguard::harness::{HarnessError, ScenarioConfig};
use gridguard::ingest::IngestError;
use gridguard::models::ModelError;

pub const SEED_ENV: &str = "GRIDGUARD_SEED";

#[derive(Debug, Parser)]
#[command(name = "gridguard", version, about = "Overloading-attack detection for smart-metering networks")]
struct Cli {
    /// Scenario/config JSON; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stage. GRIDGUARD_SEED takes precedence.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-meter work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Sh,
    Nbh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    T1,
    T2,
    T3,
    T4,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decode a raw meter file into cleaned SH and NBH datasets.
    Ingest {
        /// Raw `meter code kwh` file, optionally gzipped.
        raw: PathBuf,
        /// Keep only this meter (SH dataset only).
        #[arg(long)]
        meter: Option<u32>,
        #[arg(long, value_enum)]
        level: Option<LevelArg>,
        /// Also write train/validation splits.
        #[arg(long)]
        split: bool,
        /// Fail when more raw lines than this are malformed.
        #[arg(long, default_value_t = 0)]
        max_parse_errors: usize,
    },
    /// Train SH and NBH models from an ingest directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        meter: Option<u32>,
        #[arg(long, value_enum)]
        level: Option<LevelArg>,
    },
    /// Inject attacks into the validation (or full) datasets.
    Attack {
        #[arg(long)]
        data: PathBuf,
        /// Attack type to inject; defaults to the config mix.
        #[arg(long, value_enum)]
        attack: Option<AttackArg>,
        #[arg(long)]
        meter: Option<u32>,
        #[arg(long, value_enum)]
        level: Option<LevelArg>,
    },
    /// Replay a dataset CSV through the detectors.
    Detect {
        /// Dataset CSV (an optional label column is ignored).
        #[arg(long)]
        input: PathBuf,
        /// Directory written by `train`.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        meter: Option<u32>,
        #[arg(long, value_enum)]
        level: Option<LevelArg>,
    },
    /// Run a full synthetic scenario and score it.
    Simulate,
    /// Summary tables from a `simulate` directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

/// Failure caused by the user's input rather than by the program.
#[derive(Debug)]
pub struct UserError(pub String);

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

pub fn user(msg: impl Into<String>) -> anyhow::Error {
    UserError(msg.into()).into()
}

/// Errors out with a named artifact when `path` does not exist.
pub fn require(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(user(format!("missing input: {what} ({})", path.display())))
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UserError>() {
            return 2;
        }
        if let Some(ie) = cause.downcast_ref::<IngestError>() {
            if !matches!(ie, IngestError::Io(_)) {
                return 2;
            }
        }
        if let Some(HarnessError::Config(_)) = cause.downcast_ref::<HarnessError>() {
            return 2;
        }
        if let Some(ModelError::Decode(_) | ModelError::InvalidParams(_)) = cause.downcast_ref::<ModelError>() {
            return 2;
        }
    }
    1
}

pub struct Ctx {
    pub config: ScenarioConfig,
    pub out: PathBuf,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            require(path, "config file")?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| user(format!("config {}: {e}", path.display())))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v.trim().parse().map_err(|_| user(format!("{SEED_ENV}={v} is not an unsigned integer")))?;
    }
    cfg.validate().map_err(|e| user(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(user("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let ctx = Ctx {
        config: load_config(&cli)?,
        out: cli.out.clone(),
    };
    match cli.command {
        Command::Ingest {
            raw,
            meter,
            level,
            split,
            max_parse_errors,
        } => commands::ingest(&ctx, &raw, meter, level, split, max_parse_errors),
        Command::Train { data, meter, level } => commands::train(&ctx, &data, meter, level),
        Command::Attack {
            data,
            attack,
            meter,
            level,
        } => commands::attack(&ctx, &data, attack, meter, level),
        Command::Detect {
            input,
            models,
            meter,
            level,
        } => commands::detect(&ctx, &input, &models, meter, level),
        Command::Simulate => commands::simulate(&ctx),
        Command::Report { run } => commands::report(&ctx, &run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
