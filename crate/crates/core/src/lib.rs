//! Sequential τ-quantile forecasting of real-valued time series.
//!
//! The forecaster aggregates a grid of nearest-neighbor experts. Expert
//! `(k, ℓ̄)` matches the last `k` observations against every earlier window,
//! keeps the `ℓ̄` closest, and predicts the pinball-optimal quantile of the
//! values that followed them. Experts are mixed with exponential weights
//! driven by their cumulative pinball loss.
//!
//! Alongside the mixture the crate carries the classical baselines it is
//! usually compared against, forecast metrics and a backtest harness, and
//! seeded synthetic processes with closed-form oracles for verification.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aggregator;
pub mod baselines;
pub mod error;
pub mod eval;
pub mod knn;
pub mod pinball;
pub mod synth;
pub mod types;

pub use aggregator::{Aggregator, ExpertRule, ExpertState, PredictionRecord, RunSummary};
pub use error::{Error, Result};
pub use knn::{DistanceEngine, NeighborSet};
pub use types::{
    CapRule, EtaSchedule, ExpertGrid, ExpertKey, NeighborMode, QuantileLevel, Series,
    TruncationPolicy,
};
