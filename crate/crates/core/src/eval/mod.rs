//! Forecast metrics and the train-on-prefix, score-next backtest.

mod backtest;
mod metrics;

pub use backtest::{backtest, BacktestPlan, BacktestResult, Method, MixtureConfig, PlanEntry, PointRecord};
pub use metrics::{error_metrics, pinball_metric, ramp_metric, ErrorMetrics, MetricsReport};
