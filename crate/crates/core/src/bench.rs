//! Pure-compute timing of the fixed-step solvers.
//!
//! Only the stepping loop is inside the timed bracket. Parameters, the
//! grid, and the output buffer are prepared beforehand and the buffer is
//! reused across runs, so allocation, parsing and serialization never
//! reach the clock. Timing uses the monotonic [`Instant`] clock.

use crate::integrators::{make_grid, solve_into, Grid, GridError, Method, SolveError};
use crate::models::{ModelKind, OdeSystem, Problem};
use serde::{Deserialize, Serialize};
use std::hint::black_box;
use std::time::{Instant, SystemTime};
use thiserror::Error;

pub const DEFAULT_WARMUP_RUNS: usize = 3;
pub const DEFAULT_MEASURED_RUNS: usize = 11;
pub const MIN_MEASURED_RUNS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} list is empty")]
    EmptyList(&'static str),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("configuration names model {config} but problem is {problem}")]
    ModelMismatch { config: ModelKind, problem: ModelKind },
    #[error("method '{0}' cannot be benchmarked (not a fixed-step scheme)")]
    NotFixedStep(Method),
    #[error("non-finite state at node {node} during a timed run")]
    NonFinite { node: usize },
}

impl<const D: usize> From<SolveError<D>> for BenchError {
    fn from(e: SolveError<D>) -> Self {
        match e {
            SolveError::NonFinite { node, .. } => BenchError::NonFinite { node },
            SolveError::NotFixedStep(m) => BenchError::NotFixedStep(m),
            other => BenchError::InvalidConfig(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub warmup_runs: usize,
    pub measured_runs: usize,
    pub model: ModelKind,
    pub method: Method,
    pub h: f64,
}

impl BenchConfig {
    pub fn new(model: ModelKind, method: Method, h: f64) -> Self {
        Self {
            warmup_runs: DEFAULT_WARMUP_RUNS,
            measured_runs: DEFAULT_MEASURED_RUNS,
            model,
            method,
            h,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.warmup_runs < 1 {
            return Err(BenchError::InvalidConfig(
                "warmup_runs must be at least 1".into(),
            ));
        }
        if self.measured_runs < MIN_MEASURED_RUNS {
            return Err(BenchError::InvalidConfig(format!(
                "measured_runs must be at least {MIN_MEASURED_RUNS}, got {}",
                self.measured_runs
            )));
        }
        if !matches!(self.method, Method::Euler | Method::Rk4 | Method::Pc) {
            return Err(BenchError::NotFixedStep(self.method));
        }
        Ok(())
    }
}

/// Timing samples and summary for one (model, method, h) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub config: BenchConfig,
    /// Wall time of each measured run, seconds.
    pub runs_s: Vec<f64>,
    pub median_s: f64,
    pub min_s: f64,
    pub mean_s: f64,
    /// Sample standard deviation (n - 1).
    pub stddev_s: f64,
    pub host: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    /// Final state of the last measured run.
    pub final_state: Vec<f64>,
    /// Hash of the bit patterns of `final_state`.
    pub checksum: u64,
}

/// Summary statistics of a sample of durations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub min: f64,
    pub mean: f64,
    pub stddev: f64,
}

pub fn summarize(samples: &[f64]) -> Summary {
    assert!(!samples.is_empty(), "cannot summarize an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let stddev = if n > 1 {
        (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary {
        median,
        min: sorted[0],
        mean,
        stddev,
    }
}

/// FNV-1a over the IEEE-754 bits of each component.
pub fn state_checksum(state: &[f64]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for v in state {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// `hostname/os-arch/Ncpu`, so records from different machines are never
/// mistaken for each other.
pub fn host_descriptor() -> String {
    let hostname = ["/proc/sys/kernel/hostname", "/etc/hostname"]
        .iter()
        .find_map(|p| std::fs::read_to_string(p).ok())
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .or_else(|| std::env::var("HOSTNAME").ok())
        .unwrap_or_else(|| "unknown-host".to_owned());
    let cpus = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{hostname}/{}-{}/{cpus}cpu",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

fn timestamp_now() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

struct Timing {
    runs_s: Vec<f64>,
    final_state: Vec<f64>,
}

fn time_system<S, const D: usize>(
    config: &BenchConfig,
    system: &S,
    y0: [f64; D],
    grid: &Grid,
) -> Result<Timing, BenchError>
where
    S: OdeSystem<D>,
{
    let mut buffer = vec![[0.0; D]; grid.len()];
    for _ in 0..config.warmup_runs {
        solve_into(config.method, black_box(system), black_box(y0), grid, &mut buffer)?;
    }
    let mut runs_s = Vec::with_capacity(config.measured_runs);
    for _ in 0..config.measured_runs {
        let start = Instant::now();
        let outcome = solve_into(
            config.method,
            black_box(system),
            black_box(y0),
            grid,
            &mut buffer,
        );
        let elapsed = start.elapsed();
        outcome?;
        black_box(&buffer);
        runs_s.push(elapsed.as_secs_f64());
    }
    Ok(Timing {
        runs_s,
        final_state: buffer[buffer.len() - 1].to_vec(),
    })
}

/// Times `config.measured_runs` solves of `problem` on `grid` after
/// `config.warmup_runs` untimed ones.
pub fn time_solver(
    config: &BenchConfig,
    problem: &Problem,
    grid: &Grid,
) -> Result<BenchRecord, BenchError> {
    config.validate()?;
    if config.model != problem.kind() {
        return Err(BenchError::ModelMismatch {
            config: config.model,
            problem: problem.kind(),
        });
    }
    let timing = match problem {
        Problem::Si { params, initial } => {
            time_system(config, params, initial.to_array(), grid)?
        }
        Problem::Sir { params, initial } => {
            time_system(config, params, initial.to_array(), grid)?
        }
    };
    let summary = summarize(&timing.runs_s);
    Ok(BenchRecord {
        config: *config,
        median_s: summary.median,
        min_s: summary.min,
        mean_s: summary.mean,
        stddev_s: summary.stddev,
        host: host_descriptor(),
        timestamp: timestamp_now(),
        checksum: state_checksum(&timing.final_state),
        final_state: timing.final_state,
        runs_s: timing.runs_s,
    })
}

/// Repetition counts and interval shared by every cell of a suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub warmup_runs: usize,
    pub measured_runs: usize,
    pub t0: f64,
    pub t_end: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            warmup_runs: DEFAULT_WARMUP_RUNS,
            measured_runs: DEFAULT_MEASURED_RUNS,
            t0: crate::models::DEFAULT_T0,
            t_end: crate::models::DEFAULT_T_END,
        }
    }
}

/// A suite cell that could not be measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub model: ModelKind,
    pub method: Method,
    pub h: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteOutcome {
    pub records: Vec<BenchRecord>,
    pub failures: Vec<CellFailure>,
}

/// Measures every (problem, method, h) combination, sequentially, in that
/// nesting order. Failing cells are collected rather than aborting the run.
pub fn run_benchmark_suite(
    methods: &[Method],
    problems: &[Problem],
    step_sizes: &[f64],
    config: &SuiteConfig,
) -> Result<SuiteOutcome, BenchError> {
    if methods.is_empty() {
        return Err(BenchError::EmptyList("method"));
    }
    if problems.is_empty() {
        return Err(BenchError::EmptyList("model"));
    }
    if step_sizes.is_empty() {
        return Err(BenchError::EmptyList("step size"));
    }
    let mut outcome = SuiteOutcome::default();
    for problem in problems {
        for &method in methods {
            for &h in step_sizes {
                let cell = BenchConfig {
                    warmup_runs: config.warmup_runs,
                    measured_runs: config.measured_runs,
                    model: problem.kind(),
                    method,
                    h,
                };
                let result = make_grid(config.t0, config.t_end, h)
                    .map_err(BenchError::from)
                    .and_then(|grid| time_solver(&cell, problem, &grid));
                match result {
                    Ok(record) => outcome.records.push(record),
                    Err(e) => outcome.failures.push(CellFailure {
                        model: problem.kind(),
                        method,
                        h,
                        error: e.to_string(),
                    }),
                }
            }
        }
    }
    Ok(outcome)
}
