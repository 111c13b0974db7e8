//! Command-line flags, the optional TOML config file, and their merge.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use epibench_core::bench::{DEFAULT_MEASURED_RUNS, DEFAULT_WARMUP_RUNS, MIN_MEASURED_RUNS};
use epibench_core::models::{
    DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_I0, DEFAULT_R0, DEFAULT_S0, DEFAULT_T0, DEFAULT_T_END,
};
use epibench_core::{Method, ModelKind, Problem, SiParams, SiState, SirParams, SirState};
use serde::Deserialize;
use std::path::{Path, PathBuf};

const PRECEDENCE: &str = "\
Settings are resolved in this order, first match wins:
  1. command-line flags
  2. keys in the --config TOML file
  3. built-in defaults: alpha=2.18e-3, beta=2.18e-3*202, s0=762, i0=1, r0=0, t0=0, tend=14

Config file keys: model, method (array), h (array), alpha, beta, s0, i0, r0,
t0, tend, out, format, warmup-runs, measured-runs.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 --check failure.";

#[derive(Debug, Parser)]
#[command(name = "epibench", version, about = "Fixed-step SI/SIR solvers: trajectories, accuracy and run-time")]
#[command(after_help = PRECEDENCE)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one model with one method and step size; emit the trajectory.
    #[command(after_help = PRECEDENCE)]
    Solve(CommonArgs),
    /// Score methods with R² against the exact (SI) or adaptive (SIR) reference.
    #[command(after_help = PRECEDENCE)]
    Accuracy(AccuracyArgs),
    /// Time the fixed-step solvers.
    #[command(after_help = PRECEDENCE)]
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file; its keys are overridden by flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// si or sir.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// euler, rk4, pc or reference. Repeatable.
    #[arg(long, value_parser = parse_method)]
    pub method: Vec<Method>,
    /// Step size in days, must divide the interval. Repeatable.
    #[arg(long)]
    pub h: Vec<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// SIR only.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub i0: Option<f64>,
    /// SIR only.
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub tend: Option<f64>,
    /// Directory for output files (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct AccuracyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run the accuracy acceptance checks on the default problems and print a
    /// JSON pass/fail summary.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run the timing-methodology checks on the finished suite.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub warmup_runs: Option<usize>,
    /// At least 3.
    #[arg(long)]
    pub measured_runs: Option<usize>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    model: Option<String>,
    method: Option<Vec<String>>,
    h: Option<Vec<f64>>,
    alpha: Option<f64>,
    beta: Option<f64>,
    s0: Option<f64>,
    i0: Option<f64>,
    r0: Option<f64>,
    t0: Option<f64>,
    tend: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    warmup_runs: Option<usize>,
    measured_runs: Option<usize>,
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

/// Flags merged over the config file merged over the defaults. Lists that
/// were not given anywhere stay `None` so each command can pick its own.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    pub methods: Option<Vec<Method>>,
    pub steps: Option<Vec<f64>>,
    pub alpha: f64,
    beta: Option<f64>,
    pub s0: f64,
    pub i0: f64,
    r0: Option<f64>,
    pub t0: f64,
    pub tend: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub warmup_runs: usize,
    pub measured_runs: usize,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        Self::resolve_with_runs(args, None, None)
    }

    pub fn resolve_with_runs(
        args: &CommonArgs,
        warmup_runs: Option<usize>,
        measured_runs: Option<usize>,
    ) -> Result<Self> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let model = match (args.model, &file.model) {
            (Some(m), _) => Some(m),
            (None, Some(s)) => Some(s.parse().map_err(anyhow::Error::msg)?),
            (None, None) => None,
        };
        let methods = if !args.method.is_empty() {
            Some(args.method.clone())
        } else {
            file.method
                .map(|list| {
                    list.iter()
                        .map(|s| s.parse().map_err(anyhow::Error::msg))
                        .collect::<Result<Vec<Method>>>()
                })
                .transpose()?
        };
        let steps = if !args.h.is_empty() {
            Some(args.h.clone())
        } else {
            file.h
        };
        let cfg = RunConfig {
            model,
            methods,
            steps,
            alpha: args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
            beta: args.beta.or(file.beta),
            s0: args.s0.or(file.s0).unwrap_or(DEFAULT_S0),
            i0: args.i0.or(file.i0).unwrap_or(DEFAULT_I0),
            r0: args.r0.or(file.r0),
            t0: args.t0.or(file.t0).unwrap_or(DEFAULT_T0),
            tend: args.tend.or(file.tend).unwrap_or(DEFAULT_T_END),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(Format::Table),
            warmup_runs: warmup_runs.or(file.warmup_runs).unwrap_or(DEFAULT_WARMUP_RUNS),
            measured_runs: measured_runs
                .or(file.measured_runs)
                .unwrap_or(DEFAULT_MEASURED_RUNS),
        };
        if let Some(list) = &cfg.methods {
            if list.is_empty() {
                bail!("method list is empty");
            }
        }
        if let Some(list) = &cfg.steps {
            if list.is_empty() {
                bail!("step size list is empty");
            }
        }
        if cfg.model == Some(ModelKind::Si) {
            if cfg.beta.is_some() {
                bail!("--beta only applies to the sir model");
            }
            if cfg.r0.is_some() {
                bail!("--r0 only applies to the sir model");
            }
        }
        if cfg.measured_runs < MIN_MEASURED_RUNS {
            bail!(
                "--measured-runs must be at least {MIN_MEASURED_RUNS}, got {}",
                cfg.measured_runs
            );
        }
        if cfg.warmup_runs < 1 {
            bail!("--warmup-runs must be at least 1");
        }
        Ok(cfg)
    }

    /// The problem for `kind`, with every parameter validated.
    pub fn problem(&self, kind: ModelKind) -> Result<Problem> {
        Ok(match kind {
            ModelKind::Si => Problem::Si {
                params: SiParams::new(self.alpha)?,
                initial: SiState::new(self.s0, self.i0)?,
            },
            ModelKind::Sir => Problem::Sir {
                params: SirParams::new(self.alpha, self.beta.unwrap_or(DEFAULT_BETA))?,
                initial: SirState::new(self.s0, self.i0, self.r0.unwrap_or(DEFAULT_R0))?,
            },
        })
    }
}
