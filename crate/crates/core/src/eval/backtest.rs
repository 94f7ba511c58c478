use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::aggregator::{Aggregator, ExpertRule};
use crate::baselines::{
    ar_fit, dow_ma_predict, holt_winters_fit, hw_predict, ma_predict, qar_fit_irls, IrlsOptions,
};
use crate::error::{Error, Result};
use crate::eval::metrics::MetricsReport;
use crate::knn::DistanceEngine;
use crate::types::{EtaSchedule, ExpertGrid, QuantileLevel, Series, TruncationPolicy};

/// One series of a backtest with its forecast origins `m` (train on
/// `y_1^m`, score `y_{m+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub id: String,
    pub series: Series,
    pub dates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestPlan {
    entries: Vec<PlanEntry>,
    tau: QuantileLevel,
}

impl BacktestPlan {
    pub fn new(entries: Vec<PlanEntry>, tau: QuantileLevel) -> Result<Self> {
        for entry in &entries {
            if entry.dates.iter().any(|&m| m == 0 || m + 1 > entry.series.len()) {
                return Err(Error::InvalidParameter("every date m needs 1 <= m and m + 1 <= series length"));
            }
            if entry.dates.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter("dates must be strictly increasing"));
            }
        }
        Ok(Self { entries, tau })
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn tau(&self) -> QuantileLevel {
        self.tau
    }

    pub fn cell_count(&self) -> usize {
        self.entries.iter().map(|e| e.dates.len()).sum()
    }
}

/// Settings shared by both expert mixtures.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MixtureConfig {
    pub grid: ExpertGrid,
    pub eta: EtaSchedule,
    pub truncation: TruncationPolicy,
    pub engine: DistanceEngine,
}

impl MixtureConfig {
    /// `k_max × ℓ̄_max` uniform grid, `η_n = √(1/n)`, no truncation.
    pub fn uniform(k_max: usize, lbar_max: usize) -> Result<Self> {
        Ok(Self {
            grid: ExpertGrid::uniform(k_max, lbar_max)?,
            eta: EtaSchedule::InverseSqrt,
            truncation: TruncationPolicy::Off,
            engine: DistanceEngine::default(),
        })
    }
}

/// A forecaster that can be backtested.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Method {
    QuantileExpertMixture(MixtureConfig),
    MeanExpertMixture(MixtureConfig),
    Qar { order: usize, irls: IrlsOptions },
    Ar { order: usize },
    Ma { window: usize },
    DayOfWeekMa { period: usize, window: Option<usize> },
    HoltWinters { season_length: usize, grid_step: f64 },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::QuantileExpertMixture(_) => "QuantileExpertMixture".into(),
            Method::MeanExpertMixture(_) => "MeanExpertMixture".into(),
            Method::Qar { order, .. } => format!("QAR({order})"),
            Method::Ar { order } => format!("AR({order})"),
            Method::Ma { .. } => "MA".into(),
            Method::DayOfWeekMa { .. } => "DayOfTheWeekMA".into(),
            Method::HoltWinters { .. } => "HoltWinters".into(),
        }
    }

    fn mixture(&self, tau: QuantileLevel) -> Option<Result<Aggregator>> {
        let (config, rule) = match self {
            Method::QuantileExpertMixture(c) => (c, ExpertRule::PinballQuantile(tau)),
            Method::MeanExpertMixture(c) => (c, ExpertRule::SquaredMean),
            _ => return None,
        };
        Some(Aggregator::new(
            config.grid.clone(),
            rule,
            config.eta,
            config.truncation,
            config.engine,
        ))
    }

    /// Forecast of `y_{m+1}` from `history = y_1^m`.
    pub fn predict_next(&self, history: &[f64], tau: QuantileLevel) -> Result<f64> {
        if let Some(agg) = self.mixture(tau) {
            let mut agg = agg?;
            for t in 1..=history.len() {
                agg.predict(&history[..t - 1])?;
                agg.update(history[t - 1])?;
            }
            return Ok(agg.predict(history)?.aggregate);
        }
        match self {
            Method::Qar { order, irls } => {
                qar_fit_irls(history, *order, tau, *irls)?.model.predict_next(history)
            }
            Method::Ar { order } => ar_fit(history, *order)?.predict_next(history),
            Method::Ma { window } => ma_predict(history, *window),
            Method::DayOfWeekMa { period, window } => dow_ma_predict(history, *period, *window),
            Method::HoltWinters {
                season_length,
                grid_step,
            } => Ok(hw_predict(&holt_winters_fit(history, *season_length, *grid_step)?)),
            Method::QuantileExpertMixture(_) | Method::MeanExpertMixture(_) => unreachable!(),
        }
    }

    /// Forecasts for every origin in `dates`. Online mixtures make a single
    /// pass and read off the forecasts at steps `m + 1`; since they are
    /// causal this equals refitting on each prefix.
    pub fn predict_origins(&self, series: &[f64], dates: &[usize], tau: QuantileLevel) -> Vec<Result<f64>> {
        let Some(agg) = self.mixture(tau) else {
            return dates
                .iter()
                .map(|&m| self.predict_next(&series[..m], tau))
                .collect();
        };
        let mut agg = match agg {
            Ok(agg) => agg,
            Err(e) => return dates.iter().map(|_| Err(e.clone())).collect(),
        };
        let mut out = Vec::with_capacity(dates.len());
        let Some(&last) = dates.last() else {
            return out;
        };
        let mut next_date = dates.iter().peekable();
        for t in 1..=last + 1 {
            let record = match agg.predict(&series[..t - 1]) {
                Ok(r) => r,
                Err(e) => {
                    out.extend(next_date.map(|_| Err(e.clone())));
                    return out;
                }
            };
            if next_date.peek() == Some(&&(t - 1)) {
                next_date.next();
                out.push(Ok(record.aggregate));
            }
            if t <= last {
                if let Err(e) = agg.update(series[t - 1]) {
                    out.extend(next_date.map(|_| Err(e.clone())));
                    return out;
                }
            }
        }
        out
    }
}

/// Outcome of one `(series, m)` cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PointRecord {
    pub series_id: String,
    pub m: usize,
    pub observed: f64,
    pub prediction: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BacktestResult {
    pub method: String,
    pub report: MetricsReport,
    /// Ordered by series id, then origin.
    pub points: Vec<PointRecord>,
}

/// Runs `method` on every cell of `plan` and pools the successful cells.
///
/// Cells are pooled in `(series id, m)` order whatever order they were
/// produced in; failed cells are kept in `points` with their error and
/// counted in `report.excluded`.
pub fn backtest(plan: &BacktestPlan, method: &Method) -> Result<BacktestResult> {
    let tau = plan.tau();
    let mut points = Vec::with_capacity(plan.cell_count());
    for entry in plan.entries() {
        let y = entry.series.values();
        let forecasts = method.predict_origins(y, &entry.dates, tau);
        for (&m, forecast) in entry.dates.iter().zip(forecasts) {
            let (prediction, error) = match forecast {
                Ok(p) if p.is_finite() => (Some(p), None),
                Ok(_) => (None, Some(String::from("non-finite forecast"))),
                Err(e) => (None, Some(format!("{e}"))),
            };
            points.push(PointRecord {
                series_id: entry.id.clone(),
                m,
                observed: y[m],
                prediction,
                error,
            });
        }
    }
    points.sort_by(|a, b| a.series_id.cmp(&b.series_id).then(a.m.cmp(&b.m)));
    let (mut preds, mut obs) = (Vec::new(), Vec::new());
    for p in &points {
        if let Some(pred) = p.prediction {
            preds.push(pred);
            obs.push(p.observed);
        }
    }
    let excluded = points.len() - preds.len();
    Ok(BacktestResult {
        method: method.name(),
        report: MetricsReport::from_points(&preds, &obs, tau, excluded)?,
        points,
    })
}
