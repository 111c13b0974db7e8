//! Golden values and self-checks run by `epibench ... --check`.
//!
//! Each check reproduces one golden accuracy value or one numerical
//! property of the solvers at a pinned tolerance. Benchmark checks take a
//! finished suite so the caller controls when timing happens.

use crate::accuracy::{accuracy_sweep, exact_si_trajectory, si_convergence_order};
use crate::bench::{state_checksum, SuiteOutcome};
use crate::integrators::{euler_step, make_grid, rk4_step, solve, Method};
use crate::metrics::round_half_even;
use crate::models::{
    Problem, SiParams, SiState, SirParams, SirState, DEFAULT_ALPHA, DEFAULT_T0, DEFAULT_T_END,
};
use crate::refsolver::{reference_solve, sample, AdaptiveConfig};
use serde::Serialize;

/// Step sizes of the accuracy and run-time tables.
pub const TABLE_STEPS: [f64; 3] = [0.25, 0.10, 0.01];
/// Step sizes of the convergence-order fit.
pub const ORDER_STEPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Golden SI R² (identical for S and I), per step in [`TABLE_STEPS`].
pub const GOLDEN_SI_EULER: [f64; 3] = [0.9585463, 0.9927564, 0.9999239];
pub const GOLDEN_SI_PC: [f64; 3] = [0.9994189, 0.9999798, 1.0];
pub const GOLDEN_SI_RK4: [f64; 3] = [1.0, 1.0, 1.0];
/// Half a unit in the 7th decimal.
pub const GOLDEN_TOL: f64 = 5e-8;
/// Lower bound for SIR RK4 against the adaptive reference.
pub const SIR_RK4_BAND: f64 = 0.999999;
pub const CONSERVATION_REL_TOL: f64 = 1e-9;
pub const EULER_ORDER: (f64, f64) = (0.8, 1.2);
pub const PC_ORDER: (f64, f64) = (1.7, 2.3);
pub const RK4_ORDER: (f64, f64) = (3.5, 4.5);
/// Euler step from (762, 1) with h = 0.25.
pub const EULER_STEP_GOLDEN: [f64; 2] = [761.58471, 1.41529];
pub const EULER_STEP_TOL: f64 = 1e-9;
/// Reference-vs-exact bound as a multiple of rtol.
pub const REFERENCE_RTOL_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name: name.to_owned(),
            passed,
            detail,
        }
    }

    fn failed(id: u32, name: &str, err: impl std::fmt::Display) -> Self {
        Self::new(id, name, false, format!("error: {err}"))
    }
}

fn golden_si(id: u32, name: &str, method: Method, golden: &[f64; 3]) -> CheckOutcome {
    let reports = match accuracy_sweep(
        &Problem::default_si(),
        &[method],
        &TABLE_STEPS,
        DEFAULT_T0,
        DEFAULT_T_END,
        &AdaptiveConfig::for_interval(DEFAULT_T0, DEFAULT_T_END),
    ) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::failed(id, name, e),
    };
    let mut passed = true;
    let mut detail = Vec::new();
    for (rep, want) in reports.iter().zip(golden) {
        for (comp, got) in rep.ordered() {
            let ok = (round_half_even(got, 7) - want).abs() < GOLDEN_TOL;
            passed &= ok;
            detail.push(format!("h={} {comp}: {got:.9} (want {want})", rep.h));
        }
    }
    CheckOutcome::new(id, name, passed, detail.join("; "))
}

fn golden_si_rk4(id: u32) -> CheckOutcome {
    let name = "SI RK4 R² rounds to 1.0";
    let reports = match accuracy_sweep(
        &Problem::default_si(),
        &[Method::Rk4],
        &TABLE_STEPS,
        DEFAULT_T0,
        DEFAULT_T_END,
        &AdaptiveConfig::for_interval(DEFAULT_T0, DEFAULT_T_END),
    ) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::failed(id, name, e),
    };
    let worst = reports
        .iter()
        .flat_map(|r| r.per_compartment.values())
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    CheckOutcome::new(
        id,
        name,
        worst < GOLDEN_TOL,
        format!("max |R² - 1| = {worst:e}"),
    )
}

fn sir_band(id: u32) -> CheckOutcome {
    let name = "SIR RK4 vs adaptive reference R² >= 0.999999";
    let reports = match accuracy_sweep(
        &Problem::default_sir(),
        &[Method::Rk4],
        &TABLE_STEPS,
        DEFAULT_T0,
        DEFAULT_T_END,
        &AdaptiveConfig::for_interval(DEFAULT_T0, DEFAULT_T_END),
    ) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::failed(id, name, e),
    };
    let worst = reports.iter().map(|r| r.min_r2()).fold(1.0, f64::min);
    CheckOutcome::new(
        id,
        name,
        worst >= SIR_RK4_BAND,
        format!("min R² = {worst:.10}"),
    )
}

/// Largest relative deviation of the population total over every node of
/// every (model, method, h) table cell.
pub fn conservation_deviation() -> Result<f64, String> {
    let mut worst = 0.0f64;
    for h in TABLE_STEPS {
        let grid = make_grid(DEFAULT_T0, DEFAULT_T_END, h).map_err(|e| e.to_string())?;
        for method in Method::FIXED_STEP {
            let si = solve(method, &SiParams::default(), SiState::default().to_array(), &grid)
                .map_err(|e| e.to_string())?;
            let n = SiState::default().total();
            for y in si.states() {
                worst = worst.max((y[0] + y[1] - n).abs() / n);
            }
            let sir = solve(
                method,
                &SirParams::default(),
                SirState::default().to_array(),
                &grid,
            )
            .map_err(|e| e.to_string())?;
            let n = SirState::default().total();
            for y in sir.states() {
                worst = worst.max((y[0] + y[1] + y[2] - n).abs() / n);
            }
        }
    }
    Ok(worst)
}

fn conservation(id: u32) -> CheckOutcome {
    let name = "population conserved on every table cell";
    match conservation_deviation() {
        Ok(worst) => CheckOutcome::new(
            id,
            name,
            worst <= CONSERVATION_REL_TOL,
            format!("max relative drift = {worst:e}"),
        ),
        Err(e) => CheckOutcome::failed(id, name, e),
    }
}

fn orders(id: u32) -> CheckOutcome {
    let name = "empirical convergence orders";
    let bands = [
        (Method::Euler, EULER_ORDER),
        (Method::Pc, PC_ORDER),
        (Method::Rk4, RK4_ORDER),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    for (method, (lo, hi)) in bands {
        match si_convergence_order(
            method,
            &SiParams::default(),
            &SiState::default(),
            DEFAULT_T0,
            DEFAULT_T_END,
            &ORDER_STEPS,
        ) {
            Ok(Some(p)) => {
                passed &= (lo..=hi).contains(&p);
                detail.push(format!("{method}: {p:.3} in [{lo}, {hi}]"));
            }
            Ok(None) => {
                passed = false;
                detail.push(format!("{method}: all errors below round-off floor"));
            }
            Err(e) => return CheckOutcome::failed(id, name, e),
        }
    }
    CheckOutcome::new(id, name, passed, detail.join("; "))
}

/// The Euler step golden plus RK4 against its hand-expanded SI stage
/// formulas. The extended-precision RK4 oracle lives in the test suite.
fn single_steps(id: u32) -> CheckOutcome {
    let name = "single-step oracles";
    let p = SiParams::default();
    let y = euler_step(&p, 0.0, &[762.0, 1.0], 0.25);
    let euler_err = (y[0] - EULER_STEP_GOLDEN[0])
        .abs()
        .max((y[1] - EULER_STEP_GOLDEN[1]).abs());

    let (a, h, s, i) = (DEFAULT_ALPHA, 0.25, 762.0, 1.0);
    let k1 = a * s * i;
    let k2 = a * (s - h / 2.0 * k1) * (i + h / 2.0 * k1);
    let k3 = a * (s - h / 2.0 * k2) * (i + h / 2.0 * k2);
    let k4 = a * (s - h * k3) * (i + h * k3);
    let inc = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let (y4, _) = rk4_step(&p, 0.0, &[s, i], h);
    let rk4_rel = ((y4[0] - (s - inc)) / (s - inc))
        .abs()
        .max(((y4[1] - (i + inc)) / (i + inc)).abs());
    CheckOutcome::new(
        id,
        name,
        euler_err <= EULER_STEP_TOL && rk4_rel <= 1e-12,
        format!("euler abs err {euler_err:e}; rk4 rel err {rk4_rel:e}"),
    )
}

fn reference_vs_exact(id: u32) -> CheckOutcome {
    let name = "adaptive reference matches closed-form SI";
    let cfg = AdaptiveConfig::for_interval(DEFAULT_T0, DEFAULT_T_END);
    let p = SiParams::default();
    let init = SiState::default();
    let run = || -> Result<f64, String> {
        let grid = make_grid(DEFAULT_T0, DEFAULT_T_END, 0.25).map_err(|e| e.to_string())?;
        let dense = reference_solve(&p, init.to_array(), DEFAULT_T0, DEFAULT_T_END, &cfg)
            .map_err(|e| e.to_string())?;
        let sampled = sample(&dense, &grid).map_err(|e| e.to_string())?;
        let exact = exact_si_trajectory(&p, &init, &grid).map_err(|e| e.to_string())?;
        Ok(max_relative_error(sampled.states(), exact.states()))
    };
    match run() {
        Ok(err) => CheckOutcome::new(
            id,
            name,
            err <= REFERENCE_RTOL_FACTOR * cfg.rtol,
            format!("max relative error {err:e} (bound {:e})", REFERENCE_RTOL_FACTOR * cfg.rtol),
        ),
        Err(e) => CheckOutcome::failed(id, name, e),
    }
}

/// Max over nodes and components of `|a - b| / |b|`.
pub fn max_relative_error<const D: usize>(a: &[[f64; D]], b: &[[f64; D]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs() / v.abs()))
        .fold(0.0, f64::max)
}

/// Every accuracy and numerical-property check.
pub fn accuracy_checks() -> Vec<CheckOutcome> {
    vec![
        golden_si(1, "SI Euler R² matches golden values", Method::Euler, &GOLDEN_SI_EULER),
        golden_si(2, "SI P-C R² matches golden values", Method::Pc, &GOLDEN_SI_PC),
        golden_si_rk4(3),
        sir_band(4),
        conservation(5),
        orders(6),
        single_steps(7),
        reference_vs_exact(9),
    ]
}

/// Timing-methodology checks over a finished benchmark suite.
pub fn bench_checks(outcome: &SuiteOutcome) -> Vec<CheckOutcome> {
    let recs = &outcome.records;
    let find = |model, method, h: f64| {
        recs.iter().find(|r| {
            r.config.model == model && r.config.method == method && r.config.h == h
        })
    };

    let positive = recs.iter().all(|r| r.median_s > 0.0 && r.runs_s.iter().all(|t| *t > 0.0));
    let mut step_scaling = Vec::new();
    let mut method_cost = Vec::new();
    let mut checksums = true;
    for r in recs {
        let c = r.config;
        if c.h == 0.01 {
            if let Some(coarse) = find(c.model, c.method, 0.25) {
                step_scaling.push((c.model, c.method, r.median_s > coarse.median_s));
            }
        }
        if c.method == Method::Rk4 {
            if let Some(euler) = find(c.model, Method::Euler, c.h) {
                method_cost.push((c.model, c.h, r.median_s > euler.median_s));
            }
        }
        checksums &= state_checksum(&r.final_state) == r.checksum;
    }
    fn ok<A, B>(v: &[(A, B, bool)]) -> bool {
        !v.is_empty() && v.iter().all(|x| x.2)
    }
    let fmt = |v: &[(crate::models::ModelKind, Method, bool)]| {
        v.iter()
            .filter(|x| !x.2)
            .map(|x| format!("{}/{}", x.0, x.1))
            .collect::<Vec<_>>()
            .join(",")
    };
    vec![
        CheckOutcome::new(
            81,
            "all medians positive",
            positive && !recs.is_empty() && outcome.failures.is_empty(),
            format!("{} records, {} failures", recs.len(), outcome.failures.len()),
        ),
        CheckOutcome::new(
            82,
            "median(h=0.01) > median(h=0.25)",
            ok(&step_scaling),
            format!("violations: [{}]", fmt(&step_scaling)),
        ),
        CheckOutcome::new(
            83,
            "median(RK4) > median(Euler) at equal h",
            ok(&method_cost),
            format!(
                "violations: [{}]",
                method_cost
                    .iter()
                    .filter(|x| !x.2)
                    .map(|x| format!("{}/h={}", x.0, x.1))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ),
        CheckOutcome::new(
            84,
            "timed final state checksums",
            checksums && !recs.is_empty(),
            "checksum recomputed from recorded final states".into(),
        ),
    ]
}
