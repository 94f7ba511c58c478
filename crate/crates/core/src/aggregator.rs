//! Exponentially weighted aggregation of the expert grid.
//!
//! At step `n` the weight of expert `i` is proportional to
//! `prior_i · exp(−η_n · raw_loss_i)`, where `raw_loss_i` is the expert's
//! loss summed over steps `1..n-1`. The forecast is the weight-convex
//! combination of the experts' current predictions.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::knn::{is_active, successors, DistanceEngine, NeighborSearch};
use crate::pinball::{pinball_loss, QuantileLadder};
use crate::types::{EtaSchedule, ExpertGrid, ExpertKey, QuantileLevel, Series, TruncationPolicy};

/// What an elementary expert computes from its neighbors' successors, and
/// the loss it is scored with.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ExpertRule {
    /// Pinball-optimal quantile, scored by pinball loss.
    PinballQuantile(QuantileLevel),
    /// Arithmetic mean, scored by squared error.
    SquaredMean,
}

impl ExpertRule {
    #[inline]
    pub fn loss(&self, observed: f64, predicted: f64) -> f64 {
        match self {
            ExpertRule::PinballQuantile(tau) => pinball_loss(observed - predicted, *tau),
            ExpertRule::SquaredMean => {
                let e = observed - predicted;
                e * e
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExpertState {
    pub key: ExpertKey,
    /// Loss summed over every step scored so far.
    pub raw_loss: f64,
    pub last_prediction: Option<f64>,
}

/// One step of the mixture: per-expert predictions, their weights, and the
/// combined forecast.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PredictionRecord {
    pub step: usize,
    pub expert_predictions: Vec<f64>,
    pub weights: Vec<f64>,
    pub aggregate: f64,
}

/// Output of a full pass over a series.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunSummary {
    pub records: Vec<PredictionRecord>,
    /// `L_n(h)` for every expert, aligned with the grid.
    pub expert_average_loss: Vec<f64>,
    /// `L_n(g)`.
    pub aggregate_average_loss: f64,
}

/// Normalized weights `prior_i · exp(−η·raw_i)`.
///
/// Exponents are shifted so the smallest `η·raw_i` maps to `exp(0)`; the
/// shift cancels in the normalization.
pub fn compute_weights(prior: &[f64], raw_losses: &[f64], eta: f64) -> Vec<f64> {
    let shift = raw_losses
        .iter()
        .map(|&l| eta * l)
        .fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = prior
        .iter()
        .zip(raw_losses)
        .map(|(&b, &l)| b * libm::exp(-(eta * l - shift)))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Sequential mixture of nearest-neighbor experts.
///
/// Drive it with alternating [`predict`](Self::predict) and
/// [`update`](Self::update) calls, starting at step 1 with an empty history.
#[derive(Debug, Clone)]
pub struct Aggregator {
    grid: ExpertGrid,
    rule: ExpertRule,
    eta: EtaSchedule,
    truncation: TruncationPolicy,
    experts: Vec<ExpertState>,
    step: usize,
    searches: Vec<NeighborSearch>,
    // expert indices belonging to each search, in grid order
    members: Vec<Vec<usize>>,
    ranked: Vec<(usize, f64)>,
    ladder: QuantileLadder,
    wanted: Vec<(usize, usize)>,
    raw_buf: Vec<f64>,
}

impl Aggregator {
    pub fn new(
        grid: ExpertGrid,
        rule: ExpertRule,
        eta: EtaSchedule,
        truncation: TruncationPolicy,
        engine: DistanceEngine,
    ) -> Result<Self> {
        eta.validate()?;
        truncation.validate()?;
        let mut ks: Vec<usize> = grid.keys().iter().map(|k| k.k).collect();
        ks.sort_unstable();
        ks.dedup();
        let searches = ks.iter().map(|&k| NeighborSearch::new(k, engine)).collect();
        let mut members = alloc::vec![Vec::new(); ks.len()];
        for (i, key) in grid.keys().iter().enumerate() {
            let slot = ks.binary_search(&key.k).expect("k collected above");
            members[slot].push(i);
        }
        let experts = grid
            .keys()
            .iter()
            .map(|&key| ExpertState {
                key,
                raw_loss: 0.0,
                last_prediction: None,
            })
            .collect();
        Ok(Self {
            grid,
            rule,
            eta,
            truncation,
            experts,
            step: 1,
            searches,
            members,
            ranked: Vec::new(),
            ladder: QuantileLadder::default(),
            wanted: Vec::new(),
            raw_buf: Vec::new(),
        })
    }

    /// Quantile mixture with the incremental distance engine.
    pub fn quantile(
        grid: ExpertGrid,
        tau: QuantileLevel,
        eta: EtaSchedule,
        truncation: TruncationPolicy,
    ) -> Result<Self> {
        Self::new(
            grid,
            ExpertRule::PinballQuantile(tau),
            eta,
            truncation,
            DistanceEngine::default(),
        )
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn grid(&self) -> &ExpertGrid {
        &self.grid
    }

    pub fn rule(&self) -> ExpertRule {
        self.rule
    }

    pub fn experts(&self) -> &[ExpertState] {
        &self.experts
    }

    /// Weights for the current step, from losses through the previous step.
    pub fn compute_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.experts.iter().map(|e| e.raw_loss).collect();
        compute_weights(self.grid.prior(), &raw, self.eta.eta(self.step))
    }

    /// Evaluates every expert on `prefix = y_1^{n-1}` and combines them.
    pub fn predict(&mut self, prefix: &[f64]) -> Result<PredictionRecord> {
        let n = self.step;
        if prefix.len() != n - 1 {
            return Err(Error::PrefixLengthMismatch {
                expected: n - 1,
                got: prefix.len(),
            });
        }
        let mut predictions = alloc::vec![0.0; self.experts.len()];
        for (search, members) in self.searches.iter_mut().zip(&self.members) {
            let k = search.k();
            self.wanted.clear();
            for &i in members {
                let lbar = self.grid.effective_lbar(self.experts[i].key, n);
                if is_active(n, k, lbar) {
                    self.wanted.push((lbar, i));
                }
            }
            let deepest = self.wanted.iter().map(|&(l, _)| l).max().unwrap_or(0);
            search.ranked(prefix, deepest, &mut self.ranked);
            if deepest == 0 {
                continue;
            }
            self.wanted.sort_unstable();
            let mut succ = successors(prefix, &self.ranked);
            match self.rule {
                ExpertRule::PinballQuantile(tau) => {
                    self.ladder.clear();
                    for &(lbar, i) in &self.wanted {
                        while self.ladder.len() < lbar {
                            self.ladder.push(succ.next().expect("ranked holds deepest"));
                        }
                        predictions[i] = self.ladder.quantile(tau);
                    }
                }
                ExpertRule::SquaredMean => {
                    let (mut sum, mut taken) = (0.0, 0usize);
                    for &(lbar, i) in &self.wanted {
                        while taken < lbar {
                            sum += succ.next().expect("ranked holds deepest");
                            taken += 1;
                        }
                        predictions[i] = sum / lbar as f64;
                    }
                }
            }
        }
        for (p, e) in predictions.iter_mut().zip(&self.experts) {
            *p = crate::knn::truncate_prediction(*p, n, e.key, &self.truncation);
        }
        self.raw_buf.clear();
        self.raw_buf.extend(self.experts.iter().map(|e| e.raw_loss));
        let weights = compute_weights(self.grid.prior(), &self.raw_buf, self.eta.eta(n));
        let (lo, hi) = predictions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        let aggregate = weights
            .iter()
            .zip(&predictions)
            .map(|(w, p)| w * p)
            .sum::<f64>()
            .clamp(lo, hi);
        for (e, &p) in self.experts.iter_mut().zip(&predictions) {
            e.last_prediction = Some(p);
        }
        Ok(PredictionRecord {
            step: n,
            expert_predictions: predictions,
            weights,
            aggregate,
        })
    }

    /// Scores the cached predictions against `y_n` and moves to step `n+1`.
    pub fn update(&mut self, observed: f64) -> Result<()> {
        if self.experts.iter().any(|e| e.last_prediction.is_none()) {
            return Err(Error::PredictionMissing(self.step));
        }
        for e in &mut self.experts {
            let p = e.last_prediction.take().expect("checked above");
            e.raw_loss += self.rule.loss(observed, p);
        }
        self.step += 1;
        Ok(())
    }

    /// Runs predict/update over the whole series from a fresh state.
    pub fn run(&mut self, series: &Series) -> Result<RunSummary> {
        if self.step != 1 {
            return Err(Error::PrefixLengthMismatch {
                expected: self.step - 1,
                got: 0,
            });
        }
        let y = series.values();
        let mut records = Vec::with_capacity(y.len());
        let mut aggregate_loss = 0.0;
        for t in 1..=y.len() {
            let record = self.predict(&y[..t - 1])?;
            aggregate_loss += self.rule.loss(y[t - 1], record.aggregate);
            self.update(y[t - 1])?;
            records.push(record);
        }
        let n = y.len() as f64;
        Ok(RunSummary {
            records,
            expert_average_loss: self.experts.iter().map(|e| e.raw_loss / n).collect(),
            aggregate_average_loss: aggregate_loss / n,
        })
    }

    /// Aggregate forecasts `g_1, …, g_n` for every step of `series`, without
    /// keeping per-expert records.
    pub fn forecasts(&mut self, series: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(series.len());
        for t in 1..=series.len() {
            let record = self.predict(&series[..t - 1])?;
            self.update(series[t - 1])?;
            out.push(record.aggregate);
        }
        Ok(out)
    }
}

/// Quantile mixture over `series` with the default incremental engine.
pub fn run_sequence(
    series: &Series,
    grid: &ExpertGrid,
    tau: QuantileLevel,
    eta: EtaSchedule,
    truncation: TruncationPolicy,
) -> Result<RunSummary> {
    Aggregator::quantile(grid.clone(), tau, eta, truncation)?.run(series)
}
