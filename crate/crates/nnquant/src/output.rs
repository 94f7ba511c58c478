//! Rendering of forecasts and backtest results as tables, CSV and JSON.
//!
//! CSV numbers use the shortest decimal that parses back to the same `f64`;
//! JSON does the same through `serde_json`, with `null` for NaN.

use std::fmt::Write as _;

use clap::ValueEnum;
use nnquant_core::eval::{BacktestResult, MetricsReport};
use nnquant_core::QuantileLevel;
use serde::Serialize;

use crate::cli::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub forecast: f64,
    pub observed: Option<f64>,
}

pub fn trajectory_rows(forecasts: &[f64], observed: &[f64]) -> Vec<TrajectoryRow> {
    forecasts
        .iter()
        .enumerate()
        .map(|(i, &forecast)| TrajectoryRow {
            step: i + 1,
            forecast,
            observed: observed.get(i).copied(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictDocument {
    pub config: RunConfig,
    pub method: String,
    pub step: usize,
    pub forecast: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ASCII output")
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

pub fn render_predict(doc: &PredictDocument, format: Format) -> String {
    match format {
        Format::Json => json(doc),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["step", "forecast", "observed"]).expect("in-memory");
            match &doc.trajectory {
                Some(rows) => {
                    for r in rows {
                        let obs = r.observed.map(num).unwrap_or_default();
                        w.write_record([r.step.to_string(), num(r.forecast), obs]).expect("in-memory");
                    }
                }
                None => {
                    w.write_record([doc.step.to_string(), num(doc.forecast), String::new()])
                        .expect("in-memory");
                }
            }
            finish(w)
        }
    }
}

/// Index of the result with the smallest pinball loss; NaN never wins and
/// ties go to the earlier entry.
pub fn best_index(results: &[BacktestResult]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        let loss = r.report.pinball;
        if loss.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| loss < b) {
            best = Some((i, loss));
        }
    }
    best.map(|(i, _)| i)
}

pub const CSV_HEADER: [&str; 12] = [
    "method",
    "tau",
    "pinball",
    "ramp",
    "avg_abs",
    "avg_sqr",
    "mape_pct",
    "abs_std_dev",
    "n_points",
    "excluded",
    "mape_excluded",
    "best",
];

fn metrics_row(method: &str, r: &MetricsReport, best: bool) -> [String; 12] {
    [
        method.to_string(),
        num(r.tau),
        num(r.pinball),
        num(r.ramp),
        num(r.avg_abs),
        num(r.avg_sqr),
        num(r.mape_pct),
        num(r.abs_std_dev),
        r.n_points.to_string(),
        r.excluded.to_string(),
        r.mape_excluded.to_string(),
        best.to_string(),
    ]
}

#[derive(Serialize)]
struct BacktestDocument<'a> {
    config: &'a RunConfig,
    best: Option<&'a str>,
    results: &'a [BacktestResult],
}

pub fn render_backtest(config: &RunConfig, results: &[BacktestResult], best: Option<usize>, format: Format) -> String {
    match format {
        Format::Json => json(&BacktestDocument {
            config,
            best: best.map(|i| results[i].method.as_str()),
            results,
        }),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(CSV_HEADER).expect("in-memory");
            for (i, r) in results.iter().enumerate() {
                w.write_record(metrics_row(&r.method, &r.report, best == Some(i)))
                    .expect("in-memory");
            }
            finish(w)
        }
    }
}

fn cell(x: f64) -> String {
    if x.is_nan() {
        "n/a".into()
    } else {
        format!("{x:.2}")
    }
}

/// The two result tables: quantile scores, then point-forecast errors.
pub fn render_tables(results: &[BacktestResult], best: Option<usize>, tau: QuantileLevel) -> String {
    let label = |i: usize| {
        let mark = if results.len() > 1 && best == Some(i) { " *" } else { "" };
        format!("{}{mark}", results[i].method)
    };
    let width = (0..results.len()).map(|i| label(i).len()).max().unwrap_or(0).max(6);
    let pin_head = format!("PinBall Loss ({tau})");
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {pin_head:>18}  {:>10}", "Method", "Ramp Loss");
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(s, "{:<width$}  {:>18}  {:>10}", label(i), cell(r.report.pinball), cell(r.report.ramp));
    }
    s.push('\n');
    let _ = writeln!(
        s,
        "{:<width$}  {:>13}  {:>13}  {:>9}  {:>12}",
        "Method", "Avg Abs Error", "Avg Sqr Error", "MAPE (%)", "Abs Std Dev"
    );
    for (i, r) in results.iter().enumerate() {
        let m = &r.report;
        let _ = writeln!(
            s,
            "{:<width$}  {:>13}  {:>13}  {:>9}  {:>12}",
            label(i),
            cell(m.avg_abs),
            cell(m.avg_sqr),
            cell(m.mape_pct),
            cell(m.abs_std_dev)
        );
    }
    s.push('\n');
    for r in results {
        let m = &r.report;
        let _ = writeln!(
            s,
            "{}: {} points scored, {} excluded, {} zero observations left out of MAPE",
            r.method, m.n_points, m.excluded, m.mape_excluded
        );
    }
    if results.len() > 1 {
        if let Some(i) = best {
            let _ = writeln!(s, "best by pinball loss: {}", results[i].method);
        }
    }
    s
}
