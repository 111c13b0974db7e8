//! Exit-gate criteria. Everything runs inside a single test so that the
//! benchmark criterion never shares the machine with other test threads.
//!
//! Run with `cargo test -p epibench-core --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use epibench_core::accuracy::{accuracy_sweep, exact_si_trajectory, si_convergence_order};
use epibench_core::bench::{run_benchmark_suite, state_checksum, SuiteConfig};
use epibench_core::checks::max_relative_error;
use epibench_core::integrators::{euler_step, make_grid, rk4_step, solve, Method};
use epibench_core::metrics::{round_half_even, R2Report};
use epibench_core::models::{SiParams, SiState, DEFAULT_ALPHA};
use epibench_core::refsolver::{reference_solve, sample, AdaptiveConfig};
use epibench_core::Problem;
use std::time::{Duration, Instant};

const STEPS: [f64; 3] = [0.25, 0.10, 0.01];
const GOLDEN_TOL: f64 = 5e-8;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn si_reports(method: Method) -> Vec<R2Report> {
    accuracy_sweep(
        &Problem::default_si(),
        &[method],
        &STEPS,
        0.0,
        14.0,
        &AdaptiveConfig::for_interval(0.0, 14.0),
    )
    .expect("SI sweep")
}

/// Every compartment of `reports[j]` must satisfy `accept(j, value)`.
fn check_cells(reports: &[R2Report], accept: impl Fn(usize, f64) -> bool) -> Verdict {
    let mut ok = true;
    let mut cells = Vec::new();
    for (j, rep) in reports.iter().enumerate() {
        for (comp, v) in rep.ordered() {
            ok &= accept(j, v);
            cells.push(format!("h={} {comp}={v:.9}", rep.h));
        }
    }
    verdict(ok, cells.join(" "))
}

fn criterion_1() -> Verdict {
    let golden = [0.9585463, 0.9927564, 0.9999239];
    check_cells(&si_reports(Method::Euler), |j, v| {
        (round_half_even(v, 7) - golden[j]).abs() < GOLDEN_TOL
    })
}

fn criterion_2() -> Verdict {
    let golden = [0.9994189, 0.9999798];
    check_cells(&si_reports(Method::Pc), |j, v| match j {
        0 | 1 => (round_half_even(v, 7) - golden[j]).abs() < GOLDEN_TOL,
        _ => v >= 0.99999995,
    })
}

fn criterion_3() -> Verdict {
    check_cells(&si_reports(Method::Rk4), |_, v| (v - 1.0).abs() < GOLDEN_TOL)
}

fn criterion_4() -> Verdict {
    let reports = accuracy_sweep(
        &Problem::default_sir(),
        &[Method::Rk4],
        &STEPS,
        0.0,
        14.0,
        &AdaptiveConfig::for_interval(0.0, 14.0),
    )
    .expect("SIR sweep");
    check_cells(&reports, |_, v| v >= 0.999999)
}

fn criterion_5() -> Verdict {
    let mut worst = 0.0f64;
    for problem in [Problem::default_si(), Problem::default_sir()] {
        let n = problem.population();
        for h in STEPS {
            let grid = make_grid(0.0, 14.0, h).unwrap();
            for method in Method::FIXED_STEP {
                let totals: Vec<f64> = match problem {
                    Problem::Si { params, initial } => solve(method, &params, initial.to_array(), &grid)
                        .unwrap()
                        .states()
                        .iter()
                        .map(|y| y.iter().sum())
                        .collect(),
                    Problem::Sir { params, initial } => {
                        solve(method, &params, initial.to_array(), &grid)
                            .unwrap()
                            .states()
                            .iter()
                            .map(|y| y.iter().sum())
                            .collect()
                    }
                };
                for total in totals {
                    worst = worst.max((total - n).abs());
                }
            }
        }
    }
    let bound = 1e-9 * 763.0;
    verdict(
        worst <= bound,
        format!("max |sum - N| = {worst:e} (bound {bound:e}) over 18 cells"),
    )
}

fn criterion_6() -> Verdict {
    let steps = [0.2, 0.1, 0.05, 0.025];
    let bands = [
        (Method::Euler, 0.8, 1.2),
        (Method::Pc, 1.7, 2.3),
        (Method::Rk4, 3.5, 4.5),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (method, lo, hi) in bands {
        let order = si_convergence_order(
            method,
            &SiParams::default(),
            &SiState::default(),
            0.0,
            14.0,
            &steps,
        )
        .unwrap();
        let inside = order.is_some_and(|p| (lo..=hi).contains(&p));
        ok &= inside;
        parts.push(format!("{method}={:.4}", order.unwrap_or(f64::NAN)));
    }
    verdict(ok, parts.join(" "))
}

fn criterion_7() -> Verdict {
    let p = SiParams::default();
    let e = euler_step(&p, 0.0, &[762.0, 1.0], 0.25);
    let euler_ok = (e[0] - 761.58471).abs() <= 1e-9 && (e[1] - 1.41529).abs() <= 1e-9;

    let (y, _) = rk4_step(&p, 0.0, &[762.0, 1.0], 0.25);
    let (os, oi) = common::rk4_si_step(DEFAULT_ALPHA, 762.0, 1.0, 0.25);
    let rel = ((y[0] - os) / os).abs().max(((y[1] - oi) / oi).abs());
    verdict(
        euler_ok && rel <= 1e-12,
        format!(
            "euler=({:.9}, {:.9}) rk4 rel err vs 256-bit oracle = {rel:e}",
            e[0], e[1]
        ),
    )
}

fn criterion_8() -> Verdict {
    let outcome = run_benchmark_suite(
        &Method::FIXED_STEP,
        &[Problem::default_si(), Problem::default_sir()],
        &STEPS,
        &SuiteConfig::default(),
    )
    .expect("suite");
    let recs = &outcome.records;
    let find = |r: &epibench_core::bench::BenchRecord, method: Method, h: f64| {
        recs.iter()
            .find(|o| o.config.model == r.config.model && o.config.method == method && o.config.h == h)
            .expect("cell present")
    };

    let positive = recs.iter().all(|r| r.median_s > 0.0 && r.runs_s.iter().all(|t| *t > 0.0));
    let finer_slower = recs
        .iter()
        .filter(|r| r.config.h == 0.01)
        .all(|r| r.median_s > find(r, r.config.method, 0.25).median_s);
    let rk4_slower = recs
        .iter()
        .filter(|r| r.config.method == Method::Rk4)
        .all(|r| r.median_s > find(r, Method::Euler, r.config.h).median_s);

    let mut bit_exact = true;
    for r in recs {
        let grid = make_grid(0.0, 14.0, r.config.h).unwrap();
        let untimed: Vec<f64> = match Problem::default_si().kind() == r.config.model {
            true => {
                let Problem::Si { params, initial } = Problem::default_si() else { unreachable!() };
                solve(r.config.method, &params, initial.to_array(), &grid)
                    .unwrap()
                    .final_state()
                    .to_vec()
            }
            false => {
                let Problem::Sir { params, initial } = Problem::default_sir() else { unreachable!() };
                solve(r.config.method, &params, initial.to_array(), &grid)
                    .unwrap()
                    .final_state()
                    .to_vec()
            }
        };
        let same_bits = untimed
            .iter()
            .zip(&r.final_state)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        bit_exact &= same_bits && state_checksum(&untimed) == r.checksum;
    }

    verdict(
        recs.len() == 18 && outcome.failures.is_empty() && positive && finer_slower && rk4_slower && bit_exact,
        format!(
            "records={} (a) positive={positive} (b) h=0.01 slower={finer_slower} \
             (c) rk4 slower={rk4_slower} (d) bit-exact={bit_exact}",
            recs.len()
        ),
    )
}

fn criterion_9() -> Verdict {
    let p = SiParams::default();
    let init = SiState::default();
    let cfg = AdaptiveConfig::for_interval(0.0, 14.0);
    let grid = make_grid(0.0, 14.0, 0.25).unwrap();
    let dense = reference_solve(&p, init.to_array(), 0.0, 14.0, &cfg).unwrap();
    let sampled = sample(&dense, &grid).unwrap();
    let exact = exact_si_trajectory(&p, &init, &grid).unwrap();
    let err = max_relative_error(sampled.states(), exact.states());
    verdict(
        err <= 100.0 * cfg.rtol,
        format!("max relative error {err:e} (bound {:e})", 100.0 * cfg.rtol),
    )
}

#[test]
fn acceptance_criteria() {
    type Criterion = (u32, &'static str, fn() -> Verdict, Duration);
    let criteria: [Criterion; 9] = [
        (1, "SI Euler golden R²", criterion_1, Duration::from_secs(1)),
        (2, "SI P-C golden R²", criterion_2, Duration::from_secs(1)),
        (3, "SI RK4 R² = 1.0", criterion_3, Duration::from_secs(1)),
        (4, "SIR RK4 vs adaptive reference", criterion_4, Duration::from_secs(2)),
        (5, "conservation on all cells", criterion_5, Duration::from_secs(2)),
        (6, "convergence orders", criterion_6, Duration::from_secs(2)),
        (7, "single-step oracles", criterion_7, Duration::from_secs(1)),
        (8, "benchmark methodology", criterion_8, Duration::from_secs(30)),
        (9, "reference vs exact SI", criterion_9, Duration::from_secs(1)),
    ];

    let mut failed = Vec::new();
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < budget;
        let passed = v.passed && in_time;
        println!(
            "{} criterion {id}: {name} [{:.3}s / {:.0}s] {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs_f64(),
            v.detail
        );
        if !passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
