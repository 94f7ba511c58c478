//! Autoregressions fitted by least squares and by the pinball criterion.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pinball::pinball_loss;
use crate::types::QuantileLevel;

/// `y_t ≈ intercept + Σ_i coefficients[i-1]·y_{t-i}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// One-step forecast after `history`, using its last `p` values.
    pub fn predict_next(&self, history: &[f64]) -> Result<f64> {
        let p = self.order();
        if history.len() < p {
            return Err(Error::WrongLagCount {
                expected: p,
                got: history.len(),
            });
        }
        let lags: Vec<f64> = history.iter().rev().take(p).copied().collect();
        ar_predict(self, &lags)
    }

    fn as_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.order() + 1);
        v.push(self.intercept);
        v.extend_from_slice(&self.coefficients);
        v
    }

    fn from_vector(beta: &[f64]) -> Self {
        Self {
            intercept: beta[0],
            coefficients: beta[1..].to_vec(),
        }
    }
}

/// `intercept + Σ coefficients[i]·last[i]` where `last = [y_{n-1}, …, y_{n-p}]`.
pub fn ar_predict(model: &LinearModel, last: &[f64]) -> Result<f64> {
    if last.len() != model.order() {
        return Err(Error::WrongLagCount {
            expected: model.order(),
            got: last.len(),
        });
    }
    Ok(model.intercept
        + model
            .coefficients
            .iter()
            .zip(last)
            .map(|(c, y)| c * y)
            .sum::<f64>())
}

/// Lagged design: rows `[1, y_{t-1}, …, y_{t-p}]` and targets `y_t` for
/// `t = p+1..n`.
struct Design {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Design {
    fn new(series: &[f64], p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("autoregressive order must be positive"));
        }
        if series.len() < p + 2 {
            return Err(Error::SeriesTooShort {
                needed: p + 2,
                got: series.len(),
            });
        }
        let rows = series.len() - p;
        let x = DMatrix::from_fn(rows, p + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                // row r targets y_{p+r+1}; column c holds lag c
                series[p + r - c]
            }
        });
        let y = DVector::from_fn(rows, |r, _| series[p + r]);
        Ok(Self { x, y })
    }

    fn residuals(&self, beta: &[f64]) -> DVector<f64> {
        let b = DVector::from_column_slice(beta);
        &self.y - &self.x * b
    }

    fn pinball_objective(&self, beta: &[f64], tau: QuantileLevel) -> f64 {
        self.residuals(beta).iter().map(|&r| pinball_loss(r, tau)).sum()
    }

    /// Minimizes `Σ w_i (y_i − x_i·β)²` through a QR factorization of the
    /// row-scaled design.
    fn weighted_least_squares(&self, weights: Option<&[f64]>) -> Result<Vec<f64>> {
        let (mut xw, mut yw) = (self.x.clone(), self.y.clone());
        if let Some(w) = weights {
            for (r, &wi) in w.iter().enumerate() {
                let s = libm::sqrt(wi);
                xw.row_mut(r).scale_mut(s);
                yw[r] *= s;
            }
        }
        let cols = xw.ncols();
        if xw.nrows() < cols {
            return Err(Error::RankDeficient);
        }
        // scale columns to unit norm so the rank test is scale-free
        let norms: Vec<f64> = (0..cols).map(|c| xw.column(c).norm()).collect();
        if norms.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
            return Err(Error::RankDeficient);
        }
        for (c, &n) in norms.iter().enumerate() {
            xw.column_mut(c).unscale_mut(n);
        }
        let qr = xw.qr();
        let r = qr.r();
        if (0..cols).any(|i| r[(i, i)].abs() < 1e-10) {
            return Err(Error::RankDeficient);
        }
        qr.q_tr_mul(&mut yw);
        let rhs = yw.rows(0, cols).into_owned();
        let scaled = r.solve_upper_triangular(&rhs).ok_or(Error::RankDeficient)?;
        let beta: Vec<f64> = scaled.iter().zip(&norms).map(|(b, n)| b / n).collect();
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::RankDeficient);
        }
        Ok(beta)
    }
}

/// Ordinary least squares AR(p) with intercept.
pub fn ar_fit(series: &[f64], p: usize) -> Result<LinearModel> {
    let design = Design::new(series, p)?;
    Ok(LinearModel::from_vector(&design.weighted_least_squares(None)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IrlsOptions {
    /// Floor on `|r_i|` in the reweighting.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Stop once no coefficient moves by more than this.
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QarFit {
    /// Best iterate seen, by pinball objective.
    pub model: LinearModel,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Quantile AR(p) by iteratively reweighted least squares.
///
/// Starts from OLS and repeatedly solves the weighted problem with
/// `w_i = |τ − 1[r_i ≤ 0]| / max(|r_i|, ε)`, whose weighted squared residual
/// equals the pinball loss at the current iterate. The returned model is the
/// best iterate, so its objective never exceeds the OLS start.
pub fn qar_fit_irls(series: &[f64], p: usize, tau: QuantileLevel, opts: IrlsOptions) -> Result<QarFit> {
    if !(opts.epsilon > 0.0) || !(opts.tol >= 0.0) {
        return Err(Error::InvalidParameter("IRLS epsilon must be positive and tol non-negative"));
    }
    let design = Design::new(series, p)?;
    let mut beta = design.weighted_least_squares(None)?;
    let mut best = (design.pinball_objective(&beta, tau), beta.clone());
    let (mut converged, mut iterations) = (false, 0);
    let level = tau.value();
    let mut weights = Vec::with_capacity(design.y.len());
    while iterations < opts.max_iter {
        iterations += 1;
        weights.clear();
        weights.extend(design.residuals(&beta).iter().map(|&r| {
            let tilt = if r <= 0.0 { 1.0 - level } else { level };
            tilt / r.abs().max(opts.epsilon)
        }));
        let next = match design.weighted_least_squares(Some(&weights)) {
            Ok(b) => b,
            Err(_) => break,
        };
        let change = next
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let objective = design.pinball_objective(&next, tau);
        if objective < best.0 {
            best = (objective, next.clone());
        }
        beta = next;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(QarFit {
        model: LinearModel::from_vector(&best.1),
        objective: best.0,
        converged,
        iterations,
    })
}

/// Pinball objective of `model` on the lagged design of `series`.
pub fn qar_objective(series: &[f64], model: &LinearModel, tau: QuantileLevel) -> Result<f64> {
    let design = Design::new(series, model.order())?;
    Ok(design.pinball_objective(&model.as_vector(), tau))
}
