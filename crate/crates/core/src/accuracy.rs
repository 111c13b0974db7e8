//! Accuracy workflows: build the reference trajectory for a problem, run
//! the fixed-step solvers on the same grid and score them with R².
//!
//! SI problems are scored against the closed-form solution, SIR problems
//! against the adaptive Dormand-Prince solution evaluated through its dense
//! output on the solver's grid.

use crate::integrators::{make_grid, solve, Grid, GridError, Method, Trajectory};
use crate::metrics::{compare_trajectories, max_abs_error, MetricsError, R2Report, ReportMeta};
use crate::models::{si_exact, ModelError, OdeSystem, Problem, SiParams, SiState};
use crate::refsolver::{reference_solve, sample, AdaptiveConfig, DenseSolution, RefSolveError};
use thiserror::Error;

/// Label recorded in reports scored against the closed-form SI solution.
pub const EXACT_REFERENCE: &str = "exact";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AccuracyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("numerical solve failed: {0}")]
    Solve(String),
    #[error("reference solve failed: {0}")]
    Reference(#[from] RefSolveError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0} list is empty")]
    EmptyList(&'static str),
}

/// Label recorded in reports scored against the adaptive solver.
pub fn reference_label(config: &AdaptiveConfig) -> String {
    format!(
        "dopri5 dense output (rtol={:e}, atol={:e})",
        config.rtol, config.atol
    )
}

/// Closed-form SI solution on every node of `grid`; `initial` is the state
/// at `grid.t0()`.
pub fn exact_si_trajectory(
    params: &SiParams,
    initial: &SiState,
    grid: &Grid,
) -> Result<Trajectory<2>, ModelError> {
    let t0 = grid.t0();
    let states = grid
        .nodes()
        .map(|t| si_exact(params, initial, t - t0).map(SiState::to_array))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory::new(*grid, states, Method::Reference))
}

fn run<S: OdeSystem<D>, const D: usize>(
    method: Method,
    system: &S,
    y0: [f64; D],
    grid: &Grid,
    dense: Option<&DenseSolution<D>>,
) -> Result<Trajectory<D>, AccuracyError> {
    match (method, dense) {
        (Method::Reference, Some(dense)) => Ok(sample(dense, grid)?),
        (Method::Reference, None) => {
            let cfg = AdaptiveConfig::for_interval(grid.t0(), grid.end());
            let dense = reference_solve(system, y0, grid.t0(), grid.end(), &cfg)?;
            Ok(sample(&dense, grid)?)
        }
        _ => solve(method, system, y0, grid).map_err(|e| AccuracyError::Solve(e.to_string())),
    }
}

/// R² of every `(method, h)` cell for one problem, in method-major order.
///
/// The adaptive reference (SIR) is computed once and sampled on each grid.
pub fn accuracy_sweep(
    problem: &Problem,
    methods: &[Method],
    step_sizes: &[f64],
    t0: f64,
    t_end: f64,
    ref_config: &AdaptiveConfig,
) -> Result<Vec<R2Report>, AccuracyError> {
    if methods.is_empty() {
        return Err(AccuracyError::EmptyList("method"));
    }
    if step_sizes.is_empty() {
        return Err(AccuracyError::EmptyList("step size"));
    }
    let grids = step_sizes
        .iter()
        .map(|&h| make_grid(t0, t_end, h))
        .collect::<Result<Vec<_>, _>>()?;

    let mut reports = Vec::with_capacity(methods.len() * grids.len());
    match problem {
        Problem::Si { params, initial } => {
            let y0 = initial.to_array();
            let exacts = grids
                .iter()
                .map(|g| exact_si_trajectory(params, initial, g))
                .collect::<Result<Vec<_>, _>>()?;
            let dense = if methods.contains(&Method::Reference) {
                Some(reference_solve(params, y0, t0, t_end, ref_config)?)
            } else {
                None
            };
            for &method in methods {
                for ((grid, exact), &h) in grids.iter().zip(&exacts).zip(step_sizes) {
                    let numerical = run(method, params, y0, grid, dense.as_ref())?;
                    let meta = ReportMeta {
                        model: problem.kind(),
                        method,
                        h,
                    };
                    reports.push(compare_trajectories(
                        &numerical,
                        exact,
                        meta,
                        EXACT_REFERENCE,
                    )?);
                }
            }
        }
        Problem::Sir { params, initial } => {
            let y0 = initial.to_array();
            let dense = reference_solve(params, y0, t0, t_end, ref_config)?;
            let label = reference_label(ref_config);
            for &method in methods {
                for (grid, &h) in grids.iter().zip(step_sizes) {
                    let reference = sample(&dense, grid)?;
                    let numerical = run(method, params, y0, grid, Some(&dense))?;
                    let meta = ReportMeta {
                        model: problem.kind(),
                        method,
                        h,
                    };
                    reports.push(compare_trajectories(&numerical, &reference, meta, &label)?);
                }
            }
        }
    }
    Ok(reports)
}

/// Maximum absolute error over all nodes and compartments of a fixed-step
/// SI solve against the closed form.
pub fn si_max_error(
    method: Method,
    params: &SiParams,
    initial: &SiState,
    grid: &Grid,
) -> Result<f64, AccuracyError> {
    let numerical = solve(method, params, initial.to_array(), grid)
        .map_err(|e| AccuracyError::Solve(e.to_string()))?;
    let exact = exact_si_trajectory(params, initial, grid)?;
    let mut worst = 0.0f64;
    for k in 0..2 {
        worst = worst.max(max_abs_error(&exact.component(k), &numerical.component(k))?);
    }
    Ok(worst)
}

/// Least-squares slope of `log(error)` against `log(h)`.
///
/// Points whose error is at or below `floor` are treated as round-off
/// dominated and dropped; `None` if fewer than two points remain.
pub fn fit_order(steps: &[f64], errors: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > floor)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Empirical order of convergence of `method` on an SI problem over
/// `[t0, t_end]`, from the max-norm error at each step size.
pub fn si_convergence_order(
    method: Method,
    params: &SiParams,
    initial: &SiState,
    t0: f64,
    t_end: f64,
    step_sizes: &[f64],
) -> Result<Option<f64>, AccuracyError> {
    let errors = step_sizes
        .iter()
        .map(|&h| si_max_error(method, params, initial, &make_grid(t0, t_end, h)?))
        .collect::<Result<Vec<_>, _>>()?;
    // Round-off floor: a few thousand ulps of the population.
    let floor = 1e-12 * initial.total();
    Ok(fit_order(step_sizes, &errors, floor))
}
