use crate::error::{Error, Result};
use crate::pinball::pinball_loss;
use crate::types::QuantileLevel;

fn check(preds: &[f64], obs: &[f64]) -> Result<()> {
    if preds.len() != obs.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: obs.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Mean pinball loss `(1/N) Σ ρ_τ(obs_i − preds_i)`.
pub fn pinball_metric(preds: &[f64], obs: &[f64], tau: QuantileLevel) -> Result<f64> {
    check(preds, obs)?;
    let total: f64 = preds
        .iter()
        .zip(obs)
        .map(|(p, o)| pinball_loss(o - p, tau))
        .sum();
    Ok(total / preds.len() as f64)
}

/// Fraction of observations strictly above their forecast. A calibrated
/// τ-quantile forecaster scores close to `1 − τ`.
pub fn ramp_metric(preds: &[f64], obs: &[f64]) -> Result<f64> {
    check(preds, obs)?;
    let above = preds.iter().zip(obs).filter(|(p, o)| o > p).count();
    Ok(above as f64 / preds.len() as f64)
}

/// Point-forecast error figures.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ErrorMetrics {
    pub avg_abs: f64,
    pub avg_sqr: f64,
    /// Over nonzero observations only; NaN when every observation is zero.
    pub mape_pct: f64,
    /// Population standard deviation of `|e_i|`.
    pub abs_std_dev: f64,
    /// Observations equal to zero, left out of MAPE.
    pub mape_excluded: usize,
}

pub fn error_metrics(preds: &[f64], obs: &[f64]) -> Result<ErrorMetrics> {
    check(preds, obs)?;
    let n = preds.len() as f64;
    let (mut abs_sum, mut sqr_sum, mut pct_sum, mut pct_count) = (0.0, 0.0, 0.0, 0usize);
    for (p, o) in preds.iter().zip(obs) {
        let e = o - p;
        abs_sum += e.abs();
        sqr_sum += e * e;
        if *o != 0.0 {
            pct_sum += e.abs() / o.abs();
            pct_count += 1;
        }
    }
    let avg_abs = abs_sum / n;
    let spread: f64 = preds
        .iter()
        .zip(obs)
        .map(|(p, o)| {
            let d = (o - p).abs() - avg_abs;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(ErrorMetrics {
        avg_abs,
        avg_sqr: sqr_sum / n,
        mape_pct: if pct_count == 0 {
            f64::NAN
        } else {
            100.0 * pct_sum / pct_count as f64
        },
        abs_std_dev: libm::sqrt(spread),
        mape_excluded: preds.len() - pct_count,
    })
}

/// The six pooled figures of a backtest, plus bookkeeping counts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MetricsReport {
    pub tau: f64,
    pub pinball: f64,
    pub ramp: f64,
    pub avg_abs: f64,
    pub avg_sqr: f64,
    pub mape_pct: f64,
    pub abs_std_dev: f64,
    pub n_points: usize,
    /// Cells whose forecast failed and were left out.
    pub excluded: usize,
    pub mape_excluded: usize,
}

impl MetricsReport {
    /// Pools `preds` against `obs`; with no points every figure is NaN.
    pub fn from_points(preds: &[f64], obs: &[f64], tau: QuantileLevel, excluded: usize) -> Result<Self> {
        if preds.is_empty() && obs.is_empty() {
            return Ok(Self {
                tau: tau.value(),
                pinball: f64::NAN,
                ramp: f64::NAN,
                avg_abs: f64::NAN,
                avg_sqr: f64::NAN,
                mape_pct: f64::NAN,
                abs_std_dev: f64::NAN,
                n_points: 0,
                excluded,
                mape_excluded: 0,
            });
        }
        let errors = error_metrics(preds, obs)?;
        Ok(Self {
            tau: tau.value(),
            pinball: pinball_metric(preds, obs, tau)?,
            ramp: ramp_metric(preds, obs)?,
            avg_abs: errors.avg_abs,
            avg_sqr: errors.avg_sqr,
            mape_pct: errors.mape_pct,
            abs_std_dev: errors.abs_std_dev,
            n_points: preds.len(),
            excluded,
            mape_excluded: errors.mape_excluded,
        })
    }
}
