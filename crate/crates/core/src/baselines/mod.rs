//! Competitor forecasters: moving averages, linear and quantile
//! autoregressions, additive Holt-Winters, and the mean-based expert
//! mixture.

mod holt_winters;
mod linear;
mod moving_average;

use crate::aggregator::{Aggregator, ExpertRule, RunSummary};
use crate::error::Result;
use crate::knn::DistanceEngine;
use crate::types::{EtaSchedule, ExpertGrid, Series, TruncationPolicy};

pub use holt_winters::{holt_winters_fit, hw_predict, HoltWintersModel};
pub use linear::{ar_fit, ar_predict, qar_fit_irls, qar_objective, IrlsOptions, LinearModel, QarFit};
pub use moving_average::{dow_ma_predict, ma_predict};

/// The expert mixture with mean experts scored by squared error.
pub fn mem_run(
    series: &Series,
    grid: &ExpertGrid,
    eta: EtaSchedule,
    truncation: TruncationPolicy,
) -> Result<RunSummary> {
    Aggregator::new(
        grid.clone(),
        ExpertRule::SquaredMean,
        eta,
        truncation,
        DistanceEngine::default(),
    )?
    .run(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{validate_series, ExpertKey, NeighborMode};
    use alloc::vec;

    #[test]
    fn mem_constant_series() {
        let series = validate_series(&[3.0; 40]).unwrap();
        let grid = ExpertGrid::uniform(2, 3).unwrap();
        let s = mem_run(&series, &grid, EtaSchedule::default(), TruncationPolicy::Off).unwrap();
        assert!(s.records[10..].iter().all(|r| r.aggregate == 3.0));
    }

    #[test]
    fn mem_uses_the_mean() {
        let grid = ExpertGrid::new(
            vec![ExpertKey { k: 1, lbar: 2 }],
            vec![1.0],
            NeighborMode::FixedCount,
        )
        .unwrap();
        let series = validate_series(&[1.0, 2.0, 1.0, 2.0, 9.0, 2.0, 0.0]).unwrap();
        let s = mem_run(&series, &grid, EtaSchedule::default(), TruncationPolicy::Off).unwrap();
        // at n = 7 the neighbors are t = 3 and t = 5, successors 1 and 9
        assert_eq!(s.records[6].aggregate, 5.0);
    }
}
