//! Text and machine-readable renderings of accuracy and run-time results.
//!
//! Text tables are plain fixed-width ASCII and lossy (R² at 7 decimals,
//! seconds at 6). CSV and JSON carry full precision next to the rounded
//! display value.
//!
//! CSV schemas:
//!
//! ```text
//! accuracy         model,method,compartment,h,r2_full,r2_rounded7
//! runtime (long)   model,method,h,run_index,seconds
//! runtime summary  model,method,h,median_s,min_s,mean_s,stddev_s,host,timestamp
//! ```

use crate::bench::BenchRecord;
use crate::integrators::Method;
use crate::metrics::{round_half_even, R2Report};
use crate::models::ModelKind;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub const R2_DECIMALS: usize = 7;
pub const SECONDS_DECIMALS: usize = 6;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to render")]
    Empty,
    #[error("reports mix models {0} and {1}")]
    MixedModels(ModelKind, ModelKind),
    #[error("records come from different hosts ({0} vs {1})")]
    MixedHosts(String, String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Accuracy,
    Runtime,
}

/// Layout of a rendered table: method-major rows, one column per step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub kind: TableKind,
    pub model: ModelKind,
    pub methods: Vec<Method>,
    /// Per-row compartments (accuracy tables only).
    pub compartments: Vec<String>,
    pub step_sizes: Vec<f64>,
}

impl TableSpec {
    pub fn decimals(&self) -> usize {
        match self.kind {
            TableKind::Accuracy => R2_DECIMALS,
            TableKind::Runtime => SECONDS_DECIMALS,
        }
    }

    pub fn format_cell(&self, value: f64) -> String {
        let d = self.decimals();
        format!("{value:.d$}")
    }
}

/// Step size as printed in headers: two decimals when exact at two
/// decimals (`0.10`), otherwise the shortest round-trip form.
pub fn format_step(h: f64) -> String {
    if round_half_even(h, 2) == h {
        format!("{h:.2}")
    } else {
        format!("{h}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub model: ModelKind,
    pub method: Method,
    pub compartment: String,
    pub h: f64,
    pub r2_full: f64,
    pub r2_rounded7: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRun {
    pub model: ModelKind,
    pub method: Method,
    pub h: f64,
    pub run_index: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeSummary {
    pub model: ModelKind,
    pub method: Method,
    pub h: f64,
    pub median_s: f64,
    pub min_s: f64,
    pub mean_s: f64,
    pub stddev_s: f64,
    pub host: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub spec: TableSpec,
    pub text: String,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    pub fn to_csv(&self) -> Result<String, ReportError> {
        to_csv(&self.rows)
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeTable {
    pub spec: TableSpec,
    pub text: String,
    pub runs: Vec<RuntimeRun>,
    pub summary: Vec<RuntimeSummary>,
}

impl RuntimeTable {
    pub fn long_csv(&self) -> Result<String, ReportError> {
        to_csv(&self.runs)
    }

    pub fn summary_csv(&self) -> Result<String, ReportError> {
        to_csv(&self.summary)
    }

    pub fn summary_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    pub fn long_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(&self.runs)?)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, ReportError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(ReportError::from)
}

pub fn parse_accuracy_csv(text: &str) -> Result<Vec<AccuracyRow>, ReportError> {
    from_csv(text)
}

pub fn parse_runtime_long_csv(text: &str) -> Result<Vec<RuntimeRun>, ReportError> {
    from_csv(text)
}

pub fn parse_runtime_summary_csv(text: &str) -> Result<Vec<RuntimeSummary>, ReportError> {
    from_csv(text)
}

fn push_unique<T: PartialEq + Copy>(list: &mut Vec<T>, item: T) {
    if !list.contains(&item) {
        list.push(item);
    }
}

/// Writes a fixed-width ASCII grid. The first `left` columns are
/// left-aligned, the rest right-aligned.
fn ascii_grid(title: &str, header: &[String], body: &[Vec<String>], left: usize) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain(std::iter::once(header[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let rule = {
        let mut s = String::from("+");
        for w in &widths {
            s.push_str(&"-".repeat(w + 2));
            s.push('+');
        }
        s
    };
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (c, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if c < left {
                let _ = write!(s, " {cell:<w$} |");
            } else {
                let _ = write!(s, " {cell:>w$} |");
            }
        }
        s
    };
    let mut out = String::new();
    out.push_str(title);
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    out.push_str(&line(header));
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    for r in body {
        out.push_str(&line(r));
        out.push('\n');
    }
    out.push_str(&rule);
    out.push('\n');
    out
}

/// R² table: rows grouped by method then compartment, one column per h.
pub fn render_accuracy_table(reports: &[R2Report]) -> Result<AccuracyTable, ReportError> {
    let first = reports.first().ok_or(ReportError::Empty)?;
    let model = first.model;
    if let Some(other) = reports.iter().find(|r| r.model != model) {
        return Err(ReportError::MixedModels(model, other.model));
    }
    let mut methods = Vec::new();
    let mut steps: Vec<f64> = Vec::new();
    for r in reports {
        push_unique(&mut methods, r.method);
        push_unique(&mut steps, r.h);
    }
    let compartments: Vec<String> = model.compartments().iter().map(|c| c.to_string()).collect();
    let spec = TableSpec {
        kind: TableKind::Accuracy,
        model,
        methods: methods.clone(),
        compartments: compartments.clone(),
        step_sizes: steps.clone(),
    };

    let mut header = vec!["Method".to_owned(), "Compartment".to_owned()];
    header.extend(steps.iter().map(|h| format!("h={}", format_step(*h))));

    let mut body = Vec::new();
    let mut rows = Vec::new();
    for &method in &methods {
        for comp in &compartments {
            let mut line = vec![method.label().to_owned(), comp.clone()];
            for &h in &steps {
                let cell = reports
                    .iter()
                    .find(|r| r.method == method && r.h == h)
                    .and_then(|r| r.per_compartment.get(comp).copied());
                match cell {
                    Some(v) => {
                        let shown = spec.format_cell(v);
                        rows.push(AccuracyRow {
                            model,
                            method,
                            compartment: comp.clone(),
                            h,
                            r2_full: v,
                            r2_rounded7: shown.clone(),
                        });
                        line.push(shown);
                    }
                    None => line.push("-".to_owned()),
                }
            }
            body.push(line);
        }
    }
    let title = format!(
        "R² by method and step size, {} model, reference: {} (rounded to {R2_DECIMALS} decimals)",
        model.as_str().to_uppercase(),
        first.reference
    );
    Ok(AccuracyTable {
        text: ascii_grid(&title, &header, &body, 2),
        spec,
        rows,
    })
}

/// Median run-time table: one row per method, one column per h.
pub fn render_runtime_table(records: &[BenchRecord]) -> Result<RuntimeTable, ReportError> {
    let first = records.first().ok_or(ReportError::Empty)?;
    let model = first.config.model;
    if let Some(other) = records.iter().find(|r| r.config.model != model) {
        return Err(ReportError::MixedModels(model, other.config.model));
    }
    if let Some(other) = records.iter().find(|r| r.host != first.host) {
        return Err(ReportError::MixedHosts(first.host.clone(), other.host.clone()));
    }
    let mut methods = Vec::new();
    let mut steps: Vec<f64> = Vec::new();
    for r in records {
        push_unique(&mut methods, r.config.method);
        push_unique(&mut steps, r.config.h);
    }
    let spec = TableSpec {
        kind: TableKind::Runtime,
        model,
        methods: methods.clone(),
        compartments: Vec::new(),
        step_sizes: steps.clone(),
    };

    let mut header = vec!["Method".to_owned()];
    header.extend(steps.iter().map(|h| format!("h={}", format_step(*h))));
    let body: Vec<Vec<String>> = methods
        .iter()
        .map(|&m| {
            let mut line = vec![m.label().to_owned()];
            for &h in &steps {
                line.push(
                    records
                        .iter()
                        .find(|r| r.config.method == m && r.config.h == h)
                        .map(|r| spec.format_cell(r.median_s))
                        .unwrap_or_else(|| "-".to_owned()),
                );
            }
            line
        })
        .collect();

    let runs = records
        .iter()
        .flat_map(|r| {
            r.runs_s.iter().enumerate().map(move |(i, s)| RuntimeRun {
                model,
                method: r.config.method,
                h: r.config.h,
                run_index: i,
                seconds: *s,
            })
        })
        .collect();
    let summary = records
        .iter()
        .map(|r| RuntimeSummary {
            model,
            method: r.config.method,
            h: r.config.h,
            median_s: r.median_s,
            min_s: r.min_s,
            mean_s: r.mean_s,
            stddev_s: r.stddev_s,
            host: r.host.clone(),
            timestamp: r.timestamp.clone(),
        })
        .collect();
    let title = format!(
        "Median run-time in seconds, {} model, host {} (rounded to {SECONDS_DECIMALS} decimals)",
        model.as_str().to_uppercase(),
        first.host
    );
    Ok(RuntimeTable {
        text: ascii_grid(&title, &header, &body, 1),
        spec,
        runs,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::BenchConfig;
    use std::collections::BTreeMap;

    fn report(model: ModelKind, method: Method, h: f64, v: f64) -> R2Report {
        let per_compartment: BTreeMap<String, f64> = model
            .compartments()
            .iter()
            .map(|c| (c.to_string(), v))
            .collect();
        R2Report {
            model,
            method,
            h,
            per_compartment,
            n_points: 57,
            reference: "exact".into(),
        }
    }

    fn record(method: Method, h: f64, host: &str) -> BenchRecord {
        BenchRecord {
            config: BenchConfig::new(ModelKind::Si, method, h),
            runs_s: vec![1e-6, 2e-6, 3e-6],
            median_s: 2e-6,
            min_s: 1e-6,
            mean_s: 2e-6,
            stddev_s: 1e-6,
            host: host.into(),
            timestamp: "2026-01-01T00:00:00Z".into(),
            final_state: vec![1.0, 2.0],
            checksum: 0,
        }
    }

    #[test]
    fn single_report_single_cell_per_compartment() {
        let t = render_accuracy_table(&[report(ModelKind::Si, Method::Euler, 0.25, 0.5)]).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.text.contains("h=0.25"));
        assert!(t.text.contains("0.5000000"));
    }

    #[test]
    fn si_table_has_eighteen_cells() {
        let mut reps = Vec::new();
        for m in Method::FIXED_STEP {
            for h in [0.25, 0.1, 0.01] {
                reps.push(report(ModelKind::Si, m, h, 0.9));
            }
        }
        let t = render_accuracy_table(&reps).unwrap();
        assert_eq!(t.rows.len(), 18);
        assert_eq!(t.spec.methods, Method::FIXED_STEP.to_vec());
        assert!(t.text.contains("h=0.10"));
        assert!(!t.text.contains(" - "));
    }

    #[test]
    fn mixed_models_rejected() {
        let err = render_accuracy_table(&[
            report(ModelKind::Si, Method::Euler, 0.25, 0.5),
            report(ModelKind::Sir, Method::Euler, 0.25, 0.5),
        ])
        .unwrap_err();
        assert!(matches!(err, ReportError::MixedModels(..)));
        assert!(matches!(render_accuracy_table(&[]), Err(ReportError::Empty)));
    }

    #[test]
    fn runtime_table_cells_and_errors() {
        let mut recs = Vec::new();
        for m in Method::FIXED_STEP {
            for h in [0.25, 0.1, 0.01] {
                recs.push(record(m, h, "a"));
            }
        }
        let t = render_runtime_table(&recs).unwrap();
        assert_eq!(t.summary.len(), 9);
        assert_eq!(t.runs.len(), 27);
        assert!(t.text.contains("0.000002"));
        assert!(matches!(render_runtime_table(&[]), Err(ReportError::Empty)));
        recs.push(record(Method::Euler, 0.5, "b"));
        assert!(matches!(
            render_runtime_table(&recs),
            Err(ReportError::MixedHosts(..))
        ));
    }

    #[test]
    fn step_labels() {
        assert_eq!(format_step(0.1), "0.10");
        assert_eq!(format_step(0.25), "0.25");
        assert_eq!(format_step(0.025), "0.025");
    }

    #[test]
    fn accuracy_csv_round_trips_full_precision() {
        let reps = vec![
            report(ModelKind::Sir, Method::Rk4, 0.25, 0.999_999_812_345_678_9),
            report(ModelKind::Sir, Method::Rk4, 0.1, 1.0 - 1e-15),
        ];
        let t = render_accuracy_table(&reps).unwrap();
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("model,method,compartment,h,r2_full,r2_rounded7\n"));
        assert_eq!(parse_accuracy_csv(&csv).unwrap(), t.rows);
    }

    #[test]
    fn runtime_csv_round_trips() {
        let t = render_runtime_table(&[record(Method::Rk4, 0.01, "h")]).unwrap();
        let long = t.long_csv().unwrap();
        assert!(long.starts_with("model,method,h,run_index,seconds\n"));
        assert_eq!(parse_runtime_long_csv(&long).unwrap(), t.runs);
        let summary = t.summary_csv().unwrap();
        assert!(summary
            .starts_with("model,method,h,median_s,min_s,mean_s,stddev_s,host,timestamp\n"));
        assert_eq!(parse_runtime_summary_csv(&summary).unwrap(), t.summary);
    }

    #[test]
    fn rendering_is_deterministic() {
        let reps = vec![report(ModelKind::Si, Method::Pc, 0.1, 0.99)];
        let a = render_accuracy_table(&reps).unwrap();
        let b = render_accuracy_table(&reps).unwrap();
        assert_eq!(a.text, b.text);
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    }
}
