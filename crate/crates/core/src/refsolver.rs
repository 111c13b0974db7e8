//! Adaptive Dormand-Prince 5(4) reference solver with continuous output.
//!
//! The 5th-order solution is propagated (local extrapolation), the embedded
//! 4th-order solution only drives step-size control. Every accepted step
//! stores the five coefficient vectors of the standard 4th-order
//! Dormand-Prince interpolant so the solution can be evaluated anywhere in
//! `[t0, b]` without re-integrating:
//!
//! ```text
//! θ = (t - t_n) / h,  θ' = 1 - θ
//! y(t) = r1 + θ (r2 + θ' (r3 + θ (r4 + θ' r5)))
//! ```

use crate::integrators::{Grid, Method, Trajectory};
use crate::models::OdeSystem;
use serde::{Deserialize, Serialize};
use thiserror::Error;

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order weights (row 7, FSAL).
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefSolveError {
    #[error("invalid adaptive configuration: {0}")]
    InvalidConfig(String),
    #[error("interval end {b} must be greater than start {t0}")]
    EmptyInterval { t0: f64, b: f64 },
    #[error("step size underflow at t = {t}: needed h = {h:e} below h_min = {h_min:e}")]
    StepUnderflow { t: f64, h: f64, h_min: f64 },
    #[error("exceeded {max_steps} steps before reaching the end of the interval (t = {t})")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("time {t} outside solution interval [{t0}, {b}]")]
    OutOfRange { t: f64, t0: f64, b: f64 },
}

/// Tolerances and step bounds for [`reference_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl AdaptiveConfig {
    pub const DEFAULT_RTOL: f64 = 1e-8;
    pub const DEFAULT_ATOL: f64 = 1e-10;

    /// Default tolerances with step bounds scaled to the interval length.
    pub fn for_interval(t0: f64, b: f64) -> Self {
        let span = b - t0;
        Self {
            rtol: Self::DEFAULT_RTOL,
            atol: Self::DEFAULT_ATOL,
            h_init: 1e-3 * span,
            h_min: 1e-12 * span,
            h_max: span,
            max_steps: 1_000_000,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<(), RefSolveError> {
        let bad = |msg: &str| Err(RefSolveError::InvalidConfig(msg.to_owned()));
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return bad("rtol must lie in (0, 1)");
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return bad("atol must be positive");
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max)
            || !self.h_max.is_finite()
        {
            return bad("step bounds must satisfy 0 < h_min <= h_init <= h_max");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        Ok(())
    }
}

/// Accepted steps of an adaptive solve plus their interpolation data.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution<const D: usize> {
    times: Vec<f64>,
    states: Vec<[f64; D]>,
    coeffs: Vec<[[f64; D]; 5]>,
    rejected: usize,
    evaluations: usize,
}

impl<const D: usize> DenseSolution<D> {
    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Accepted step endpoints, starting with `t0`.
    pub fn step_times(&self) -> &[f64] {
        &self.times
    }

    /// States at the accepted step endpoints.
    pub fn step_states(&self) -> &[[f64; D]] {
        &self.states
    }

    pub fn accepted_steps(&self) -> usize {
        self.coeffs.len()
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn rhs_evaluations(&self) -> usize {
        self.evaluations
    }

    /// Solution at `t`. Step endpoints return the stored state bit-exactly.
    pub fn eval(&self, t: f64) -> Result<[f64; D], RefSolveError> {
        let (t0, b) = (self.t0(), self.end());
        if !(t >= t0 && t <= b) {
            return Err(RefSolveError::OutOfRange { t, t0, b });
        }
        // First endpoint strictly greater than t.
        let upper = self.times.partition_point(|&x| x <= t);
        if upper > 0 && self.times[upper - 1] == t {
            return Ok(self.states[upper - 1]);
        }
        let step = upper - 1;
        let (ta, tb) = (self.times[step], self.times[step + 1]);
        let theta = (t - ta) / (tb - ta);
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs[step];
        Ok(std::array::from_fn(|k| {
            r1[k] + theta * (r2[k] + theta1 * (r3[k] + theta * (r4[k] + theta1 * r5[k])))
        }))
    }
}

#[inline(always)]
fn combine<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    std::array::from_fn(|k| y[k] + h * terms.iter().map(|(c, v)| c * v[k]).sum::<f64>())
}

/// Integrates `system` from `(t0, y0)` to `b` with error control.
///
/// A step is accepted when, for every component `k`,
/// `|err_k| <= atol + rtol * max(|y_k|, |y_k+|)`. The next step is
/// `h * min(5, max(0.2, 0.9 err^(-1/5)))`, never growing after a rejection.
pub fn reference_solve<S, const D: usize>(
    system: &S,
    y0: [f64; D],
    t0: f64,
    b: f64,
    config: &AdaptiveConfig,
) -> Result<DenseSolution<D>, RefSolveError>
where
    S: OdeSystem<D> + ?Sized,
{
    config.validate()?;
    if !(t0.is_finite() && b.is_finite() && b > t0) {
        return Err(RefSolveError::EmptyInterval { t0, b });
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(RefSolveError::NonFinite { t: t0 });
    }

    let mut sol = DenseSolution {
        times: vec![t0],
        states: vec![y0],
        coeffs: Vec::new(),
        rejected: 0,
        evaluations: 1,
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = system.rhs(t, &y);
    let mut h = config.h_init.min(b - t0);
    let mut last_rejected = false;
    let mut attempts = 0usize;

    while t < b {
        if attempts >= config.max_steps {
            return Err(RefSolveError::MaxSteps {
                t,
                max_steps: config.max_steps,
            });
        }
        attempts += 1;

        let final_step = t + h >= b;
        if final_step {
            h = b - t;
        }

        let k2 = system.rhs(t + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = system.rhs(t + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = system.rhs(
            t + C4 * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = system.rhs(
            t + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let t_new = if final_step { b } else { t + h };
        let k6 = system.rhs(
            t_new,
            &combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combine(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = system.rhs(t_new, &y_new);
        sol.evaluations += 6;

        if !y_new.iter().chain(k7.iter()).all(|v| v.is_finite()) {
            return Err(RefSolveError::NonFinite { t: t_new });
        }

        let mut err = 0.0f64;
        for k in 0..D {
            let e = h
                * (E1 * k1[k] + E3 * k3[k] + E4 * k4[k] + E5 * k5[k] + E6 * k6[k] + E7 * k7[k]);
            let scale = config.atol + config.rtol * y[k].abs().max(y_new[k].abs());
            err = err.max((e / scale).abs());
        }

        let mut factor = if err == 0.0 {
            FAC_MAX
        } else {
            (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
        };

        if err <= 1.0 {
            let coeffs = std::array::from_fn(|k| {
                let dy = y_new[k] - y[k];
                let bspl = h * k1[k] - dy;
                [
                    y[k],
                    dy,
                    bspl,
                    dy - h * k7[k] - bspl,
                    h * (D1 * k1[k]
                        + D3 * k3[k]
                        + D4 * k4[k]
                        + D5 * k5[k]
                        + D6 * k6[k]
                        + D7 * k7[k]),
                ]
            });
            let coeffs = transpose(coeffs);
            sol.coeffs.push(coeffs);
            sol.times.push(t_new);
            sol.states.push(y_new);
            t = t_new;
            y = y_new;
            k1 = k7;
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            if final_step {
                break;
            }
        } else {
            sol.rejected += 1;
            factor = factor.min(1.0);
            last_rejected = true;
        }

        let proposed = (h * factor).min(config.h_max);
        if proposed < config.h_min {
            return Err(RefSolveError::StepUnderflow {
                t,
                h: proposed,
                h_min: config.h_min,
            });
        }
        h = proposed;
    }

    Ok(sol)
}

fn transpose<const D: usize>(per_component: [[f64; 5]; D]) -> [[f64; D]; 5] {
    std::array::from_fn(|j| std::array::from_fn(|k| per_component[k][j]))
}

/// Evaluates the dense solution on every node of `grid`.
pub fn sample<const D: usize>(
    dense: &DenseSolution<D>,
    grid: &Grid,
) -> Result<Trajectory<D>, RefSolveError> {
    let states = grid
        .nodes()
        .map(|t| dense.eval(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory::new(*grid, states, Method::Reference))
}
