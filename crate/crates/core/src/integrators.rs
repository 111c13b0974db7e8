//! Fixed-step explicit one-step integrators on uniform grids.
//!
//! All three methods work on a generic `[f64; D]` state so the same code
//! drives the SI (`D = 2`) and SIR (`D = 3`) systems:
//!
//! ```text
//! Euler:  y+ = y + h f(t, y)
//! RK4:    k1 = f(t, y)
//!         k2 = f(t + h/2, y + h k1 / 2)
//!         k3 = f(t + h/2, y + h k2 / 2)
//!         k4 = f(t + h,   y + h k3)
//!         y+ = y + h/6 (k1 + 2 k2 + 2 k3 + k4)
//! P-C:    ỹ  = y + h f(t, y)
//!         y+ = y + h/2 (f(t, y) + f(t + h, ỹ))
//! ```
//!
//! The predictor-corrector applies its corrector exactly once per step.

use crate::models::OdeSystem;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Slack allowed when checking that a requested step divides the interval.
const DIVISOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("interval end {b} must be greater than start {t0}")]
    EmptyInterval { t0: f64, b: f64 },
    #[error("step size {h} must be finite and positive")]
    BadStep { h: f64 },
    #[error("step {h} does not evenly divide [{t0}, {b}] ((b - t0) / h = {ratio})")]
    NonDivisorStep { t0: f64, b: f64, h: f64, ratio: f64 },
    #[error("interval count must be at least 1")]
    NoIntervals,
}

/// Uniform discretization `t0 = x_0 < x_1 < ... < x_n = b`, `h = (b - t0) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t0: f64,
    b: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(t0: f64, b: f64, n: usize) -> Result<Self, GridError> {
        if !(t0.is_finite() && b.is_finite() && b > t0) {
            return Err(GridError::EmptyInterval { t0, b });
        }
        if n == 0 {
            return Err(GridError::NoIntervals);
        }
        Ok(Self {
            t0,
            b,
            n,
            h: (b - t0) / n as f64,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Node `i`, computed as `t0 + i h` rather than by accumulation. The last
    /// node is pinned to `b`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.b
        } else {
            self.t0 + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n + 1).map(move |i| self.node(i))
    }

    /// True when both grids have the same node count and every node agrees
    /// to relative `rel_tol`.
    pub fn matches(&self, other: &Grid, rel_tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let scale = self.b.abs().max(self.t0.abs()).max(f64::MIN_POSITIVE);
        self.nodes()
            .zip(other.nodes())
            .all(|(a, b)| (a - b).abs() <= rel_tol * scale)
    }
}

/// Builds the grid for a requested step. `h` is recomputed as `(b - t0) / n`
/// so that the last node lands exactly on `b`.
pub fn make_grid(t0: f64, b: f64, h_requested: f64) -> Result<Grid, GridError> {
    if !(t0.is_finite() && b.is_finite() && b > t0) {
        return Err(GridError::EmptyInterval { t0, b });
    }
    if !(h_requested.is_finite() && h_requested > 0.0) {
        return Err(GridError::BadStep { h: h_requested });
    }
    let ratio = (b - t0) / h_requested;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > DIVISOR_SLACK * n {
        return Err(GridError::NonDivisorStep {
            t0,
            b,
            h: h_requested,
            ratio,
        });
    }
    Grid::new(t0, b, n as usize)
}

/// Which scheme produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
    Pc,
    /// Adaptive Dormand-Prince reference, sampled on a grid.
    Reference,
}

impl Method {
    pub const FIXED_STEP: [Method; 3] = [Method::Euler, Method::Rk4, Method::Pc];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
            Method::Pc => "pc",
            Method::Reference => "reference",
        }
    }

    /// Display label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Euler => "Euler",
            Method::Rk4 => "RK4",
            Method::Pc => "P-C",
            Method::Reference => "Reference",
        }
    }

    /// Right-hand-side evaluations per step.
    pub fn evaluations_per_step(self) -> Option<usize> {
        match self {
            Method::Euler => Some(1),
            Method::Pc => Some(2),
            Method::Rk4 => Some(4),
            Method::Reference => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "pc" | "p-c" | "heun" => Ok(Method::Pc),
            "reference" | "ref" => Ok(Method::Reference),
            other => Err(format!(
                "unknown method '{other}' (expected euler, rk4, pc or reference)"
            )),
        }
    }
}

/// States at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    grid: Grid,
    states: Vec<[f64; D]>,
    method: Method,
}

impl<const D: usize> Trajectory<D> {
    /// Panics if `states.len() != grid.len()`.
    pub fn new(grid: Grid, states: Vec<[f64; D]>, method: Method) -> Self {
        assert_eq!(
            states.len(),
            grid.len(),
            "trajectory needs one state per grid node"
        );
        Self {
            grid,
            states,
            method,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn states(&self) -> &[[f64; D]] {
        &self.states
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn final_state(&self) -> [f64; D] {
        self.states[self.states.len() - 1]
    }

    /// Values of one compartment at every node.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|y| y[k]).collect()
    }

    /// `(t, state)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64; D])> + '_ {
        self.grid.nodes().zip(self.states.iter())
    }
}

/// Slopes of one classical RK4 step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkStageBuffer<const D: usize> {
    pub k1: [f64; D],
    pub k2: [f64; D],
    pub k3: [f64; D],
    pub k4: [f64; D],
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError<const D: usize> {
    /// A component became NaN or infinite. `states` holds every node up to
    /// and including the offending one.
    #[error("non-finite state at node {node} (t = {t})")]
    NonFinite {
        node: usize,
        t: f64,
        states: Vec<[f64; D]>,
    },
    #[error("method '{0}' is not a fixed-step scheme")]
    NotFixedStep(Method),
    #[error("output buffer holds {got} states, grid needs {expected}")]
    BufferSize { expected: usize, got: usize },
}

#[inline(always)]
fn axpy<const D: usize>(y: &[f64; D], a: f64, x: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|k| y[k] + a * x[k])
}

#[inline]
fn all_finite<const D: usize>(y: &[f64; D]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// One explicit Euler step.
#[inline]
pub fn euler_step<S, const D: usize>(system: &S, t: f64, y: &[f64; D], h: f64) -> [f64; D]
where
    S: OdeSystem<D> + ?Sized,
{
    axpy(y, h, &system.rhs(t, y))
}

/// One classical RK4 step, returning the new state and the four slopes.
#[inline]
pub fn rk4_step<S, const D: usize>(
    system: &S,
    t: f64,
    y: &[f64; D],
    h: f64,
) -> ([f64; D], RkStageBuffer<D>)
where
    S: OdeSystem<D> + ?Sized,
{
    let half = 0.5 * h;
    let k1 = system.rhs(t, y);
    let k2 = system.rhs(t + half, &axpy(y, half, &k1));
    let k3 = system.rhs(t + half, &axpy(y, half, &k2));
    let k4 = system.rhs(t + h, &axpy(y, h, &k3));
    let sixth = h / 6.0;
    let next = std::array::from_fn(|k| {
        y[k] + sixth * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
    });
    (next, RkStageBuffer { k1, k2, k3, k4 })
}

/// Euler predictor followed by a single trapezoidal corrector.
#[inline]
pub fn pc_step<S, const D: usize>(system: &S, t: f64, y: &[f64; D], h: f64) -> [f64; D]
where
    S: OdeSystem<D> + ?Sized,
{
    let f0 = system.rhs(t, y);
    let predicted = axpy(y, h, &f0);
    let f1 = system.rhs(t + h, &predicted);
    let half = 0.5 * h;
    std::array::from_fn(|k| y[k] + half * (f0[k] + f1[k]))
}

fn march<S, F, const D: usize>(
    system: &S,
    y0: [f64; D],
    grid: &Grid,
    out: &mut [[f64; D]],
    step: F,
) -> Result<(), SolveError<D>>
where
    S: OdeSystem<D> + ?Sized,
    F: Fn(&S, f64, &[f64; D], f64) -> [f64; D],
{
    if out.len() != grid.len() {
        return Err(SolveError::BufferSize {
            expected: grid.len(),
            got: out.len(),
        });
    }
    let h = grid.step();
    out[0] = y0;
    for i in 0..grid.intervals() {
        let next = step(system, grid.node(i), &out[i], h);
        out[i + 1] = next;
        if !all_finite(&next) {
            return Err(SolveError::NonFinite {
                node: i + 1,
                t: grid.node(i + 1),
                states: out[..=i + 1].to_vec(),
            });
        }
    }
    Ok(())
}

/// Integrates into caller-provided storage of exactly `grid.len()` states.
///
/// This is the allocation-free core used by both [`solve`] and the
/// benchmark harness.
pub fn solve_into<S, const D: usize>(
    method: Method,
    system: &S,
    y0: [f64; D],
    grid: &Grid,
    out: &mut [[f64; D]],
) -> Result<(), SolveError<D>>
where
    S: OdeSystem<D> + ?Sized,
{
    match method {
        Method::Euler => march(system, y0, grid, out, euler_step),
        Method::Rk4 => march(system, y0, grid, out, |s, t, y, h| rk4_step(s, t, y, h).0),
        Method::Pc => march(system, y0, grid, out, pc_step),
        Method::Reference => Err(SolveError::NotFixedStep(method)),
    }
}

/// Integrates `system` from `y0` over `grid` with a fixed-step method.
pub fn solve<S, const D: usize>(
    method: Method,
    system: &S,
    y0: [f64; D],
    grid: &Grid,
) -> Result<Trajectory<D>, SolveError<D>>
where
    S: OdeSystem<D> + ?Sized,
{
    let mut states = vec![[0.0; D]; grid.len()];
    solve_into(method, system, y0, grid, &mut states)?;
    Ok(Trajectory::new(*grid, states, method))
}

pub fn euler_solve<S, const D: usize>(
    system: &S,
    y0: [f64; D],
    grid: &Grid,
) -> Result<Trajectory<D>, SolveError<D>>
where
    S: OdeSystem<D> + ?Sized,
{
    solve(Method::Euler, system, y0, grid)
}

pub fn rk4_solve<S, const D: usize>(
    system: &S,
    y0: [f64; D],
    grid: &Grid,
) -> Result<Trajectory<D>, SolveError<D>>
where
    S: OdeSystem<D> + ?Sized,
{
    solve(Method::Rk4, system, y0, grid)
}

pub fn pc_solve<S, const D: usize>(
    system: &S,
    y0: [f64; D],
    grid: &Grid,
) -> Result<Trajectory<D>, SolveError<D>>
where
    S: OdeSystem<D> + ?Sized,
{
    solve(Method::Pc, system, y0, grid)
}
