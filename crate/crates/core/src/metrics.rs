//! Coefficient of determination between a numerical and a reference
//! trajectory.
//!
//! ```text
//! R² = 1 - Σ (y_i - ỹ_i)² / Σ (y_i - ȳ)²
//! ```
//!
//! `y` is the reference (exact or adaptive) solution, `ỹ` the numerical one
//! and `ȳ` the reference mean. Sums run over every grid node, `t0` included.

use crate::integrators::{Method, Trajectory};
use crate::models::ModelKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Relative tolerance for deciding that two trajectories share a grid.
pub const GRID_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("sequence lengths differ: reference has {reference}, predicted has {predicted}")]
    LengthMismatch { reference: usize, predicted: usize },
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("reference sequence has zero variance; R² is undefined")]
    ZeroVariance,
    #[error("trajectories are sampled on different grids")]
    GridMismatch,
    #[error("metadata lists {expected} compartments but trajectories have {got}")]
    CompartmentCount { expected: usize, got: usize },
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// R² of `predicted` against `reference`.
pub fn r_squared(reference: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    if reference.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            predicted: predicted.len(),
        });
    }
    if reference.len() < 2 {
        return Err(MetricsError::TooShort(reference.len()));
    }
    let mean = compensated_sum(reference.iter().copied()) / reference.len() as f64;
    let ss_tot = compensated_sum(reference.iter().map(|y| (y - mean) * (y - mean)));
    if ss_tot == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let ss_res = compensated_sum(
        reference
            .iter()
            .zip(predicted)
            .map(|(y, p)| (y - p) * (y - p)),
    );
    Ok(1.0 - ss_res / ss_tot)
}

/// Largest absolute pointwise difference.
pub fn max_abs_error(reference: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    if reference.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            predicted: predicted.len(),
        });
    }
    Ok(reference
        .iter()
        .zip(predicted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Rounds half-to-even at `digits` decimals, based on the exact binary value.
pub fn round_half_even(value: f64, digits: usize) -> f64 {
    format!("{value:.digits$}")
        .parse()
        .expect("formatted float parses")
}

/// Identifies one accuracy cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub model: ModelKind,
    pub method: Method,
    pub h: f64,
}

/// Per-compartment R² for one (model, method, h) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Report {
    pub model: ModelKind,
    pub method: Method,
    pub h: f64,
    /// Compartment name to R².
    pub per_compartment: BTreeMap<String, f64>,
    pub n_points: usize,
    /// How the reference was obtained.
    pub reference: String,
}

impl R2Report {
    /// Values in the model's compartment order.
    pub fn ordered(&self) -> Vec<(&'static str, f64)> {
        self.model
            .compartments()
            .iter()
            .map(|c| (*c, self.per_compartment[*c]))
            .collect()
    }

    pub fn min_r2(&self) -> f64 {
        self.per_compartment
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// One [`r_squared`] per compartment of two trajectories on the same grid.
pub fn compare_trajectories<const D: usize>(
    numerical: &Trajectory<D>,
    reference: &Trajectory<D>,
    meta: ReportMeta,
    reference_label: &str,
) -> Result<R2Report, MetricsError> {
    let names = meta.model.compartments();
    if names.len() != D {
        return Err(MetricsError::CompartmentCount {
            expected: names.len(),
            got: D,
        });
    }
    if !numerical.grid().matches(reference.grid(), GRID_MATCH_TOL) {
        return Err(MetricsError::GridMismatch);
    }
    let mut per_compartment = BTreeMap::new();
    for (k, name) in names.iter().enumerate() {
        let r2 = r_squared(&reference.component(k), &numerical.component(k))?;
        per_compartment.insert((*name).to_owned(), r2);
    }
    Ok(R2Report {
        model: meta.model,
        method: meta.method,
        h: meta.h,
        per_compartment,
        n_points: numerical.states().len(),
        reference: reference_label.to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{make_grid, solve};
    use crate::models::SiParams;
    use proptest::prelude::*;

    #[test]
    fn identical_sequences_give_one() {
        let y = [1.0, 4.0, 2.0, 8.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn hand_evaluated_case() {
        // mean 2, SStot = 2, SSres = 1
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 0.5);
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            r_squared(&[1.0, 2.0], &[1.0]),
            Err(MetricsError::LengthMismatch {
                reference: 2,
                predicted: 1
            })
        );
        assert_eq!(r_squared(&[1.0], &[1.0]), Err(MetricsError::TooShort(1)));
        assert_eq!(
            r_squared(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]),
            Err(MetricsError::ZeroVariance)
        );
    }

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn rounding_is_half_even_on_exact_ties() {
        assert_eq!(round_half_even(0.125, 2), 0.12);
        assert_eq!(round_half_even(0.375, 2), 0.38);
        assert_eq!(round_half_even(0.95854630, 7), 0.9585463);
        assert_eq!(round_half_even(0.99999997, 7), 1.0);
    }

    #[test]
    fn trajectory_against_itself() {
        let g = make_grid(0.0, 14.0, 0.25).unwrap();
        let tr = solve(Method::Rk4, &SiParams::default(), [762.0, 1.0], &g).unwrap();
        let meta = ReportMeta {
            model: ModelKind::Si,
            method: Method::Rk4,
            h: 0.25,
        };
        let rep = compare_trajectories(&tr, &tr, meta, "self").unwrap();
        assert_eq!(rep.n_points, 57);
        assert_eq!(rep.ordered(), vec![("S", 1.0), ("I", 1.0)]);
    }

    #[test]
    fn grid_and_dimension_mismatch() {
        let p = SiParams::default();
        let a = solve(Method::Euler, &p, [762.0, 1.0], &make_grid(0.0, 14.0, 0.25).unwrap())
            .unwrap();
        let b = solve(Method::Euler, &p, [762.0, 1.0], &make_grid(0.0, 14.0, 0.1).unwrap())
            .unwrap();
        let meta = ReportMeta {
            model: ModelKind::Si,
            method: Method::Euler,
            h: 0.25,
        };
        assert_eq!(
            compare_trajectories(&a, &b, meta, "x"),
            Err(MetricsError::GridMismatch)
        );
        let sir_meta = ReportMeta {
            model: ModelKind::Sir,
            ..meta
        };
        assert!(matches!(
            compare_trajectories(&a, &a, sir_meta, "x"),
            Err(MetricsError::CompartmentCount { expected: 3, got: 2 })
        ));
    }

    fn sequences() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-1e3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn invariant_under_shared_affine_map(
            (reference, predicted) in sequences(),
            a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
            b in -1e3f64..1e3,
        ) {
            let base = match r_squared(&reference, &predicted) {
                Ok(v) => v,
                Err(_) => return Ok(()),
            };
            let map = |v: &[f64]| v.iter().map(|x| a * x + b).collect::<Vec<_>>();
            let mapped = r_squared(&map(&reference), &map(&predicted)).unwrap();
            prop_assert!((mapped - base).abs() <= 1e-12 * base.abs().max(1.0),
                "base {base} mapped {mapped}");
        }

        #[test]
        fn moving_a_prediction_away_lowers_r2(
            (reference, predicted) in sequences(),
            idx in any::<prop::sample::Index>(),
            push in 0.1f64..100.0,
        ) {
            let base = match r_squared(&reference, &predicted) {
                Ok(v) => v,
                Err(_) => return Ok(()),
            };
            let j = idx.index(reference.len());
            let mut moved = predicted.clone();
            let dir = if predicted[j] >= reference[j] { 1.0 } else { -1.0 };
            moved[j] += dir * push;
            prop_assert!(r_squared(&reference, &moved).unwrap() < base);
        }

        #[test]
        fn never_exceeds_one((reference, predicted) in sequences()) {
            if let Ok(v) = r_squared(&reference, &predicted) {
                prop_assert!(v <= 1.0);
            }
        }
    }
}
