//! Additive Holt-Winters with smoothing parameters picked from a lattice.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Fitted additive Holt-Winters state after the last observation.
///
/// `seasonals[0]` is the component for the next index, `seasonals[1]` the
/// one after, and so on around the cycle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HoltWintersModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub season_length: usize,
    pub level: f64,
    pub trend: f64,
    pub seasonals: Vec<f64>,
    /// Mean squared one-step error over `t = s+1..n`.
    pub in_sample_mse: f64,
}

struct Pass {
    sse: f64,
    level: f64,
    trend: f64,
    seasonals: Vec<f64>,
}

fn smooth(y: &[f64], s: usize, alpha: f64, beta: f64, gamma: f64) -> Pass {
    let first = y[..s].iter().sum::<f64>() / s as f64;
    let second = y[s..2 * s].iter().sum::<f64>() / s as f64;
    let mut trend = (second - first) / s as f64;
    // the first-season mean sits at its midpoint (s+1)/2; carry the level to
    // index s and take seasonal deviations from the trend line
    let center = (s as f64 + 1.0) / 2.0;
    let mut level = first + trend * (s as f64 - center);
    // position i (0-based) of the cycle serves indices t with (t-1) mod s = i
    let mut seasonals: Vec<f64> = y[..s]
        .iter()
        .enumerate()
        .map(|(i, v)| v - first - trend * ((i + 1) as f64 - center))
        .collect();
    let mut sse = 0.0;
    for (i, &obs) in y.iter().enumerate().skip(s) {
        let slot = i % s;
        let forecast = level + trend + seasonals[slot];
        let e = obs - forecast;
        sse += e * e;
        let prev_level = level;
        level = alpha * (obs - seasonals[slot]) + (1.0 - alpha) * (level + trend);
        trend = beta * (level - prev_level) + (1.0 - beta) * trend;
        seasonals[slot] = gamma * (obs - level) + (1.0 - gamma) * seasonals[slot];
    }
    Pass {
        sse,
        level,
        trend,
        seasonals,
    }
}

/// Fits additive Holt-Winters with season length `s`, choosing `(α, β, γ)`
/// from `{0, g, 2g, …, 1}³` by in-sample one-step mean squared error.
/// Ties go to the lexicographically smallest triple.
pub fn holt_winters_fit(series: &[f64], season_length: usize, grid_step: f64) -> Result<HoltWintersModel> {
    let s = season_length;
    if s == 0 {
        return Err(Error::InvalidParameter("season length must be positive"));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidParameter("lattice step must lie in (0, 1]"));
    }
    if series.len() < 2 * s {
        return Err(Error::SeriesTooShort {
            needed: 2 * s,
            got: series.len(),
        });
    }
    let points = libm::round(1.0 / grid_step) as usize;
    let lattice: Vec<f64> = (0..=points)
        .map(|i| (i as f64 * grid_step).min(1.0))
        .collect();
    let mut best: Option<(f64, [f64; 3], Pass)> = None;
    for &alpha in &lattice {
        for &beta in &lattice {
            for &gamma in &lattice {
                let pass = smooth(series, s, alpha, beta, gamma);
                if !pass.sse.is_finite() {
                    continue;
                }
                if best.as_ref().is_none_or(|(sse, _, _)| pass.sse < *sse) {
                    best = Some((pass.sse, [alpha, beta, gamma], pass));
                }
            }
        }
    }
    let (sse, [alpha, beta, gamma], pass) = best.ok_or(Error::InvalidParameter("no finite lattice point"))?;
    let n = series.len();
    let mut seasonals = pass.seasonals;
    seasonals.rotate_left(n % s);
    let forecasts = n - s;
    Ok(HoltWintersModel {
        alpha,
        beta,
        gamma,
        season_length: s,
        level: pass.level,
        trend: pass.trend,
        seasonals,
        in_sample_mse: if forecasts == 0 { 0.0 } else { sse / forecasts as f64 },
    })
}

/// `level + trend + seasonal` for the next index.
pub fn hw_predict(model: &HoltWintersModel) -> f64 {
    model.level + model.trend + model.seasonals[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn manual(level: f64, trend: f64, next: f64) -> HoltWintersModel {
        HoltWintersModel {
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.5,
            season_length: 2,
            level,
            trend,
            seasonals: vec![next, 0.0],
            in_sample_mse: 0.0,
        }
    }

    #[test]
    fn predict_examples() {
        assert_eq!(hw_predict(&manual(10.0, 0.0, 0.0)), 10.0);
        assert_eq!(hw_predict(&manual(10.0, 1.0, -2.0)), 9.0);
    }

    #[test]
    fn constant_series() {
        let m = holt_winters_fit(&[6.5; 40], 7, 0.1).unwrap();
        assert_eq!(m.in_sample_mse, 0.0);
        assert_eq!(hw_predict(&m), 6.5);
        assert_eq!((m.alpha, m.beta, m.gamma), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exact_seasonal_series() {
        let pattern = [3.0, 8.0, 1.0, 4.0, 4.0, 9.0, -2.0];
        let y: Vec<f64> = (0..70).map(|i| 10.0 + pattern[i % 7]).collect();
        let m = holt_winters_fit(&y, 7, 0.1).unwrap();
        assert!(m.in_sample_mse < 1e-16);
        let next = 10.0 + pattern[70 % 7];
        assert!((hw_predict(&m) - next).abs() < 1e-8);
        // replay at the chosen lattice point: every post-initialization forecast is exact
        let pass = smooth(&y, 7, m.alpha, m.beta, m.gamma);
        assert!(pass.sse < 1e-14);
    }

    #[test]
    fn exact_linear_trend() {
        let y: Vec<f64> = (1..=70).map(|t| 2.0 * t as f64).collect();
        let m = holt_winters_fit(&y, 7, 0.1).unwrap();
        assert!(m.in_sample_mse < 1e-12);
        // last in-sample forecast error at the chosen point
        let head = &y[..69];
        let refit = smooth(head, 7, m.alpha, m.beta, m.gamma);
        let forecast = refit.level + refit.trend + refit.seasonals[69 % 7];
        assert!((forecast - y[69]).abs() < 1e-6, "{forecast} vs {}", y[69]);
        assert!((hw_predict(&m) - 142.0).abs() < 1e-6, "{}", hw_predict(&m));
    }

    #[test]
    fn trend_plus_season() {
        let pattern = [3.0, 8.0, 1.0, 4.0, 4.0, 9.0, -2.0];
        let y: Vec<f64> = (1..=84).map(|t| 0.5 * t as f64 + pattern[t % 7]).collect();
        let m = holt_winters_fit(&y, 7, 0.1).unwrap();
        assert!(m.in_sample_mse < 1e-12);
        assert!((hw_predict(&m) - (0.5 * 85.0 + pattern[85 % 7])).abs() < 1e-8);
    }

    #[test]
    fn too_short() {
        assert_eq!(
            holt_winters_fit(&[1.0; 13], 7, 0.1),
            Err(Error::SeriesTooShort { needed: 14, got: 13 })
        );
    }
}
