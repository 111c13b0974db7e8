mod config;
mod svg;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::Parser;
use config::{AccuracyArgs, BenchArgs, Cli, Command, CommonArgs, Format, RunConfig};
use epibench_core::accuracy::{accuracy_sweep, exact_si_trajectory};
use epibench_core::bench::{run_benchmark_suite, SuiteConfig};
use epibench_core::checks::{accuracy_checks, bench_checks, CheckOutcome, TABLE_STEPS};
use epibench_core::integrators::solve;
use epibench_core::refsolver::{reference_solve, sample, AdaptiveConfig};
use epibench_core::report::{render_accuracy_table, render_runtime_table, RuntimeTable};
use epibench_core::{make_grid, Grid, Method, ModelKind, Problem, Trajectory};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

/// Why a command stopped; each variant maps to one exit code.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
    Check,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Check => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Accuracy(args) => cmd_accuracy(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) => eprintln!("error: {e:#}"),
                Failure::Numerical(e) => eprintln!("numerical failure: {e:#}"),
                Failure::Check => eprintln!("check failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Outcome {
    std::fs::create_dir_all(dir)
        .and_then(|()| std::fs::write(dir.join(name), contents))
        .with_context(|| format!("cannot write {}", dir.join(name).display()))
        .map_err(usage)
}

fn grids(cfg: &RunConfig, steps: &[f64]) -> Result<Vec<Grid>, Failure> {
    steps
        .iter()
        .map(|&h| make_grid(cfg.t0, cfg.tend, h).map_err(usage))
        .collect()
}

fn cmd_solve(args: &CommonArgs) -> Outcome {
    let cfg = RunConfig::resolve(args).map_err(usage)?;
    let method = match cfg.methods.as_deref() {
        None => Method::Euler,
        Some([m]) => *m,
        Some(_) => return Err(usage(anyhow!("solve takes exactly one --method"))),
    };
    let h = match cfg.steps.as_deref() {
        None => TABLE_STEPS[0],
        Some([h]) => *h,
        Some(_) => return Err(usage(anyhow!("solve takes exactly one --h"))),
    };
    let kind = cfg.model.unwrap_or(ModelKind::Si);
    let problem = cfg.problem(kind).map_err(usage)?;
    let grid = grids(&cfg, &[h])?.remove(0);

    let (csv, json, svg) = match problem {
        Problem::Si { params, initial } => {
            let tr = run_method(method, &params, initial.to_array(), &grid)?;
            let exact = match exact_si_trajectory(&params, &initial, &grid) {
                Ok(e) => Some(e),
                Err(e) => {
                    eprintln!("warning: exact-solution overlay skipped: {e}");
                    None
                }
            };
            emit(&tr, kind, exact.as_ref())
        }
        Problem::Sir { params, initial } => {
            let tr = run_method(method, &params, initial.to_array(), &grid)?;
            emit(&tr, kind, None)
        }
    };

    if let Some(dir) = &cfg.out {
        write_file(dir, "trajectory.csv", &csv)?;
        write_file(dir, "trajectory.svg", &svg)?;
    }
    match cfg.format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{json}"),
        Format::Table => print!("{}", csv.replace(',', "\t")),
    }
    Ok(())
}

fn run_method<S, const D: usize>(
    method: Method,
    system: &S,
    y0: [f64; D],
    grid: &Grid,
) -> Result<Trajectory<D>, Failure>
where
    S: epibench_core::models::OdeSystem<D>,
{
    if method == Method::Reference {
        let rc = AdaptiveConfig::for_interval(grid.t0(), grid.end());
        let dense = reference_solve(system, y0, grid.t0(), grid.end(), &rc).map_err(numerical)?;
        sample(&dense, grid).map_err(numerical)
    } else {
        solve(method, system, y0, grid).map_err(|e| numerical(anyhow!("{e}")))
    }
}

/// CSV text, JSON rows and SVG chart for one trajectory.
fn emit<const D: usize>(
    tr: &Trajectory<D>,
    kind: ModelKind,
    exact: Option<&Trajectory<2>>,
) -> (String, String, String) {
    let names = kind.compartments();
    let mut csv = format!("t,{}\n", names.join(","));
    let mut rows = Vec::with_capacity(tr.states().len());
    for (t, y) in tr.grid().nodes().zip(tr.states()) {
        let _ = write!(csv, "{t}");
        let mut row = serde_json::Map::new();
        row.insert("t".into(), t.into());
        for (name, v) in names.iter().zip(y) {
            let _ = write!(csv, ",{v}");
            row.insert((*name).into(), (*v).into());
        }
        csv.push('\n');
        rows.push(serde_json::Value::Object(row));
    }
    let json = serde_json::to_string_pretty(&rows).expect("finite values serialize");

    let times: Vec<f64> = tr.grid().nodes().collect();
    let mut series: Vec<svg::Series> = (0..D)
        .map(|k| svg::Series {
            name: format!("{} ({})", names[k], tr.method().label()),
            color: svg::PALETTE[k],
            dashed: false,
            points: times.iter().copied().zip(tr.component(k)).collect(),
        })
        .collect();
    if let Some(ex) = exact {
        for (k, name) in names.iter().enumerate().take(2) {
            series.push(svg::Series {
                name: format!("{name} (exact)"),
                color: svg::PALETTE[k],
                dashed: true,
                points: times.iter().copied().zip(ex.component(k)).collect(),
            });
        }
    }
    let title = format!(
        "{} model, {}, h = {}",
        kind.as_str().to_uppercase(),
        tr.method().label(),
        tr.grid().step()
    );
    let chart = svg::line_chart(&title, "t (days)", &series);
    (csv, json, chart)
}

#[derive(Serialize)]
struct CheckSummary<'a> {
    passed: bool,
    checks: &'a [CheckOutcome],
}

/// Prints the JSON summary (and saves it when `out` is set); fails with
/// exit code 3 if any check failed.
fn report_checks(checks: &[CheckOutcome], out: Option<&Path>) -> Outcome {
    let passed = checks.iter().all(|c| c.passed);
    let text = serde_json::to_string_pretty(&CheckSummary { passed, checks })
        .expect("check summary serializes");
    println!("{text}");
    if let Some(dir) = out {
        write_file(dir, "checks.json", &text)?;
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_accuracy(args: &AccuracyArgs) -> Outcome {
    let cfg = RunConfig::resolve(&args.common).map_err(usage)?;
    let methods = cfg.methods.clone().unwrap_or_else(|| Method::FIXED_STEP.to_vec());
    let steps = cfg.steps.clone().unwrap_or_else(|| TABLE_STEPS.to_vec());
    let problem = cfg.problem(cfg.model.unwrap_or(ModelKind::Si)).map_err(usage)?;
    grids(&cfg, &steps)?;

    let ref_cfg = AdaptiveConfig::for_interval(cfg.t0, cfg.tend);
    let reports = accuracy_sweep(&problem, &methods, &steps, cfg.t0, cfg.tend, &ref_cfg)
        .map_err(numerical)?;
    let table = render_accuracy_table(&reports).map_err(numerical)?;
    let csv = table.to_csv().map_err(numerical)?;
    let json = table.to_json().map_err(numerical)?;

    if let Some(dir) = &cfg.out {
        write_file(dir, "accuracy.csv", &csv)?;
        write_file(dir, "accuracy.json", &json)?;
        write_file(dir, "accuracy.txt", &table.text)?;
    }
    match cfg.format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{json}"),
        Format::Table => print!("{}", table.text),
    }
    if args.check {
        report_checks(&accuracy_checks(), cfg.out.as_deref())?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Outcome {
    let cfg = RunConfig::resolve_with_runs(&args.common, args.warmup_runs, args.measured_runs)
        .map_err(usage)?;
    let methods = cfg.methods.clone().unwrap_or_else(|| Method::FIXED_STEP.to_vec());
    if let Some(m) = methods.iter().find(|m| **m == Method::Reference) {
        return Err(usage(anyhow!("method '{m}' cannot be benchmarked")));
    }
    let steps = cfg.steps.clone().unwrap_or_else(|| TABLE_STEPS.to_vec());
    let kinds = match cfg.model {
        Some(k) => vec![k],
        None => vec![ModelKind::Si, ModelKind::Sir],
    };
    let problems = kinds
        .iter()
        .map(|&k| cfg.problem(k))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(usage)?;
    grids(&cfg, &steps)?;

    let suite = SuiteConfig {
        warmup_runs: cfg.warmup_runs,
        measured_runs: cfg.measured_runs,
        t0: cfg.t0,
        t_end: cfg.tend,
    };
    let outcome = run_benchmark_suite(&methods, &problems, &steps, &suite).map_err(usage)?;
    for f in &outcome.failures {
        eprintln!("error: {} {} h={}: {}", f.model, f.method, f.h, f.error);
    }
    for r in &outcome.records {
        if r.median_s / r.min_s > 3.0 {
            eprintln!(
                "warning: {} {} h={}: median/min = {:.1}, the host may be loaded",
                r.config.model,
                r.config.method,
                r.config.h,
                r.median_s / r.min_s
            );
        }
    }

    let mut tables = Vec::new();
    for kind in kinds {
        let records: Vec<_> = outcome
            .records
            .iter()
            .filter(|r| r.config.model == kind)
            .cloned()
            .collect();
        if !records.is_empty() {
            tables.push(render_runtime_table(&records).map_err(numerical)?);
        }
    }
    if let Some(first) = tables.first() {
        let merged = RuntimeTable {
            spec: first.spec.clone(),
            text: tables.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join("\n"),
            runs: tables.iter().flat_map(|t| t.runs.clone()).collect(),
            summary: tables.iter().flat_map(|t| t.summary.clone()).collect(),
        };
        let long = merged.long_csv().map_err(numerical)?;
        let summary = merged.summary_csv().map_err(numerical)?;
        let json = merged.summary_json().map_err(numerical)?;
        if let Some(dir) = &cfg.out {
            write_file(dir, "runtime_runs.csv", &long)?;
            write_file(dir, "runtime_summary.csv", &summary)?;
            write_file(dir, "runtime_summary.json", &json)?;
            write_file(dir, "runtime.txt", &merged.text)?;
        }
        match cfg.format {
            Format::Csv => print!("{summary}"),
            Format::Json => println!("{json}"),
            Format::Table => print!("{}", merged.text),
        }
    }

    if args.check {
        report_checks(&bench_checks(&outcome), cfg.out.as_deref())?;
    }
    if !outcome.failures.is_empty() {
        return Err(numerical(anyhow!(
            "{} benchmark cell(s) failed",
            outcome.failures.len()
        )));
    }
    Ok(())
}
