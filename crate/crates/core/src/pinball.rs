//! Pinball loss and the sorted-sample quantile that minimizes it.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::QuantileLevel;

/// `ρ_τ(r) = r·(τ − 1[r ≤ 0])`.
#[inline]
pub fn pinball_loss(residual: f64, tau: QuantileLevel) -> f64 {
    let tau = tau.value();
    if residual <= 0.0 {
        (1.0 - tau) * residual.abs()
    } else {
        residual * tau
    }
}

/// `Σ_i ρ_τ(sample_i − q)`.
pub fn pinball_risk(sample: &[f64], q: f64, tau: QuantileLevel) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(sample.iter().map(|&y| pinball_loss(y - q, tau)).sum())
}

/// The `rank(m)`-th smallest element of `sample`, a minimizer of the pinball
/// risk over all reals.
pub fn empirical_quantile(sample: &[f64], tau: QuantileLevel) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted: Vec<f64> = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[tau.rank(sorted.len()) - 1])
}

/// `T_a(z)`: clamps `z` to `[-a, a]`.
#[inline]
pub fn truncate(z: f64, a: f64) -> f64 {
    z.clamp(-a, a)
}

/// Grows a sorted sample one value at a time and answers quantile queries
/// at every intermediate size.
#[derive(Debug, Default, Clone)]
pub(crate) struct QuantileLadder {
    sorted: Vec<f64>,
}

impl QuantileLadder {
    pub(crate) fn clear(&mut self) {
        self.sorted.clear();
    }

    pub(crate) fn push(&mut self, y: f64) {
        let at = self.sorted.partition_point(|&v| v.total_cmp(&y).is_le());
        self.sorted.insert(at, y);
    }

    pub(crate) fn len(&self) -> usize {
        self.sorted.len()
    }

    pub(crate) fn quantile(&self, tau: QuantileLevel) -> f64 {
        self.sorted[tau.rank(self.sorted.len()) - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn q(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    #[test]
    fn loss_examples() {
        assert_eq!(pinball_loss(2.0, q(0.5)), 1.0);
        assert!((pinball_loss(-1.0, q(0.9)) - 0.1).abs() < 1e-15);
        for t in [0.01, 0.3, 0.99] {
            assert_eq!(pinball_loss(0.0, q(t)), 0.0);
        }
    }

    #[test]
    fn risk_examples() {
        assert_eq!(pinball_risk(&[1.0, 3.0], 2.0, q(0.5)).unwrap(), 1.0);
        assert_eq!(pinball_risk(&[5.0], 5.0, q(0.2)).unwrap(), 0.0);
        assert_eq!(pinball_risk(&[1.0, 2.0, 4.0], 2.0, q(0.5)).unwrap(), 1.5);
        assert_eq!(pinball_risk(&[], 0.0, q(0.5)), Err(Error::EmptySample));
    }

    #[test]
    fn quantile_examples() {
        let half = QuantileLevel::parse("0.5").unwrap();
        assert_eq!(empirical_quantile(&[5.0, 1.0, 3.0], half).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&[7.0], q(0.01)).unwrap(), 7.0);
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(empirical_quantile(&ten, half).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[], half), Err(Error::EmptySample));
    }

    #[test]
    fn quantile_matches_sample_point_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tau = QuantileLevel::parse("0.8").unwrap();
        for _ in 0..200 {
            let sample: Vec<f64> = (0..7).map(|_| (rng.next_u32() % 1000) as f64 / 10.0).collect();
            let got = empirical_quantile(&sample, tau).unwrap();
            let best = sample
                .iter()
                .map(|&c| pinball_risk(&sample, c, tau).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(sample.contains(&got));
            assert!(pinball_risk(&sample, got, tau).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn ladder_matches_direct_quantile() {
        let tau = QuantileLevel::parse("0.3").unwrap();
        let values = [4.0, -1.0, 4.0, 2.5, 9.0, 0.0, -3.0, 2.5];
        let mut ladder = QuantileLadder::default();
        for (i, &v) in values.iter().enumerate() {
            ladder.push(v);
            assert_eq!(ladder.len(), i + 1);
            assert_eq!(
                ladder.quantile(tau),
                empirical_quantile(&values[..=i], tau).unwrap()
            );
        }
        ladder.clear();
        assert_eq!(ladder.len(), 0);
    }

    #[test]
    fn truncate_clamps() {
        assert_eq!(truncate(5.0, 2.0), 2.0);
        assert_eq!(truncate(-5.0, 2.0), -2.0);
        assert_eq!(truncate(1.5, 2.0), 1.5);
    }
}
