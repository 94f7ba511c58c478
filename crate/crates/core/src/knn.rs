//! Nearest-neighbor window matching and the elementary experts built on it.
//!
//! For a window length `k` and step `n` (so the known history is
//! `y_1^{n-1}`), the query window is `y_{n-k}^{n-1}` and the candidates are
//! the windows `y_{t-k}^{t-1}` for `k < t < n`. Candidates are ranked by
//! Euclidean distance to the query, ties going to the smaller `t`.
//!
//! Two engines produce the ranking. [`DistanceEngine::Naive`] recomputes
//! every distance at every step. [`DistanceEngine::Incremental`] keeps the
//! squared distances of all candidates and slides them forward in O(1) per
//! candidate, tracking a rounding-error bound for each; candidates whose
//! bound straddles the selection threshold are recomputed exactly, so both
//! engines return bit-identical neighbor sets.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pinball::{empirical_quantile, truncate};
use crate::types::{ExpertKey, QuantileLevel, TruncationPolicy};

/// How candidate distances are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum DistanceEngine {
    Naive,
    #[default]
    Incremental,
}

/// Neighbors of the query window, sorted by increasing index `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborSet {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

/// Squared distance between `y_{t-k}^{t-1}` and `y_{n-k}^{n-1}`, summed over
/// lags `1..=k` in order. Indices are 1-based and unchecked.
#[inline]
fn squared_distance(y: &[f64], t: usize, n: usize, k: usize) -> f64 {
    let mut acc = 0.0;
    for j in 1..=k {
        let d = y[t - j - 1] - y[n - j - 1];
        acc += d * d;
    }
    acc
}

/// Euclidean distance between the windows ending just before `t` and `n`.
pub fn window_distance(series: &[f64], t: usize, n: usize, k: usize) -> Result<f64> {
    if k == 0 || t <= k || t >= n || n > series.len() + 1 {
        return Err(Error::IndexOutOfRange { t, n, k });
    }
    Ok(libm::sqrt(squared_distance(series, t, n, k)))
}

#[inline]
fn by_distance_then_index(a: &(usize, f64), b: &(usize, f64)) -> core::cmp::Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// The `min(lbar, n-k-1)` nearest candidates for the history `prefix`
/// (`n = prefix.len() + 1`), computed by brute force.
pub fn neighbor_set(prefix: &[f64], k: usize, lbar: usize) -> Result<NeighborSet> {
    let n = prefix.len() + 1;
    if k == 0 || n < k + 2 {
        return Err(Error::NoCandidates { n, k });
    }
    Ok(into_neighbor_set(naive_ranked(prefix, k, lbar)))
}

fn into_neighbor_set(mut ranked: Vec<(usize, f64)>) -> NeighborSet {
    ranked.sort_unstable_by_key(|&(t, _)| t);
    NeighborSet {
        indices: ranked.iter().map(|&(t, _)| t).collect(),
        distances: ranked.iter().map(|&(_, sq)| libm::sqrt(sq)).collect(),
    }
}

/// Per-`k` candidate ranking with a selectable engine.
///
/// The incremental engine keeps a copy of the history it has seen; if a
/// later call passes a history that does not extend it by exactly one value,
/// the cache is rebuilt from scratch.
#[derive(Debug, Clone)]
pub struct NeighborSearch {
    k: usize,
    engine: DistanceEngine,
    sliding: SlidingDistances,
    scratch: Vec<(usize, f64)>,
    thresholds: Vec<f64>,
}

impl NeighborSearch {
    pub fn new(k: usize, engine: DistanceEngine) -> Self {
        assert!(k >= 1, "window length must be positive");
        Self {
            k,
            engine,
            sliding: SlidingDistances::default(),
            scratch: Vec::new(),
            thresholds: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Writes the `min(count, n-k-1)` nearest candidates into `out` as
    /// `(t, squared distance)` pairs ordered by distance, then by `t`.
    pub fn ranked(&mut self, prefix: &[f64], count: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let n = prefix.len() + 1;
        let k = self.k;
        if self.engine == DistanceEngine::Incremental {
            self.sliding.advance(prefix, k);
        }
        if n < k + 2 {
            return;
        }
        let candidates = n - k - 1;
        let count = count.min(candidates);
        if count == 0 {
            return;
        }
        match self.engine {
            DistanceEngine::Naive => {
                self.scratch.clear();
                self.scratch
                    .extend((k + 1..n).map(|t| (t, squared_distance(prefix, t, n, k))));
                select_smallest(&mut self.scratch, count);
                out.extend_from_slice(&self.scratch);
            }
            DistanceEngine::Incremental => {
                self.sliding
                    .select(prefix, k, count, &mut self.thresholds, out);
            }
        }
    }
}

fn select_smallest(items: &mut Vec<(usize, f64)>, count: usize) {
    if count < items.len() {
        items.select_nth_unstable_by(count - 1, by_distance_then_index);
        items.truncate(count);
    }
    items.sort_unstable_by(by_distance_then_index);
}

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Squared distances of every candidate to the current query, indexed by
/// lag `d = n - t` (so slot `d - 1` keeps its meaning from one step to the
/// next), together with a bound on each entry's distance from the exact
/// real value.
#[derive(Debug, Clone, Default)]
struct SlidingDistances {
    history: Vec<f64>,
    sq: Vec<f64>,
    err: Vec<f64>,
}

impl SlidingDistances {
    #[inline]
    fn fresh_bound(k: usize, sq: f64) -> f64 {
        2.0 * (k as f64 + 4.0) * UNIT_ROUNDOFF * sq
    }

    fn advance(&mut self, prefix: &[f64], k: usize) {
        let extends = prefix.len() == self.history.len() + 1
            && !self.history.is_empty()
            && prefix[..self.history.len()] == self.history[..];
        if extends {
            self.slide(prefix, k);
            self.history.push(prefix[prefix.len() - 1]);
        } else if prefix != &self.history[..] {
            self.rebuild(prefix, k);
            self.history.clear();
            self.history.extend_from_slice(prefix);
        }
    }

    fn rebuild(&mut self, prefix: &[f64], k: usize) {
        let n = prefix.len() + 1;
        self.sq.clear();
        self.err.clear();
        if n < k + 2 {
            return;
        }
        for d in 1..=n - k - 1 {
            let sq = squared_distance(prefix, n - d, n, k);
            self.sq.push(sq);
            self.err.push(Self::fresh_bound(k, sq));
        }
    }

    /// Moves from step `n - 1` to step `n`.
    fn slide(&mut self, prefix: &[f64], k: usize) {
        let n = prefix.len() + 1;
        let y = prefix;
        // candidate t at step n-1 becomes t+1 at step n, with the same lag
        let prev = n - 1;
        for (i, (sq, err)) in self.sq.iter_mut().zip(self.err.iter_mut()).enumerate() {
            let d = i + 1;
            let t_prev = prev - d;
            let a = y[t_prev - 1] - y[prev - 1];
            let a = a * a;
            let b = y[t_prev - k - 1] - y[prev - k - 1];
            let b = b * b;
            let old = *sq;
            let new = (old + a) - b;
            *err += 8.0 * UNIT_ROUNDOFF * (a + b + old.abs() + new.abs());
            *sq = new;
        }
        if n >= k + 2 {
            let d = n - k - 1;
            debug_assert_eq!(self.sq.len(), d - 1);
            let sq = squared_distance(y, n - d, n, k);
            self.sq.push(sq);
            self.err.push(Self::fresh_bound(k, sq));
        }
    }

    fn select(
        &mut self,
        prefix: &[f64],
        k: usize,
        count: usize,
        thresholds: &mut Vec<f64>,
        out: &mut Vec<(usize, f64)>,
    ) {
        let n = prefix.len() + 1;
        let margin = |sq: f64, err: f64| {
            err + 2.0 * (k as f64 + 4.0) * UNIT_ROUNDOFF * (sq.abs() + err)
        };
        thresholds.clear();
        thresholds.extend(
            self.sq
                .iter()
                .zip(&self.err)
                .map(|(&sq, &err)| sq + margin(sq, err)),
        );
        // at least `count` candidates have an exact distance ≤ theta, so the
        // true top-`count` all have lower bounds ≤ theta
        let theta = *thresholds
            .select_nth_unstable_by(count - 1, f64::total_cmp)
            .1;
        for (i, (sq, err)) in self.sq.iter_mut().zip(self.err.iter_mut()).enumerate() {
            if *sq - margin(*sq, *err) <= theta {
                let t = n - (i + 1);
                let exact = squared_distance(prefix, t, n, k);
                *sq = exact;
                *err = Self::fresh_bound(k, exact);
                out.push((t, exact));
            }
        }
        select_smallest(out, count);
    }
}

/// Successor values `y_t` of the nearest neighbors in rank order.
pub(crate) fn successors<'a>(
    prefix: &'a [f64],
    ranked: &'a [(usize, f64)],
) -> impl Iterator<Item = f64> + 'a {
    ranked.iter().map(move |&(t, _)| prefix[t - 1])
}

/// Whether an expert with window `k` and `lbar` neighbors has enough
/// history at step `n` to leave its degenerate branch.
#[inline]
pub fn is_active(n: usize, k: usize, lbar: usize) -> bool {
    lbar > 0 && n > k + lbar + 1
}

fn naive_ranked(prefix: &[f64], k: usize, lbar: usize) -> Vec<(usize, f64)> {
    let mut search = NeighborSearch::new(k, DistanceEngine::Naive);
    let mut ranked = Vec::new();
    search.ranked(prefix, lbar, &mut ranked);
    ranked
}

/// `h̄_n^{(k,ℓ̄)}`: the pinball quantile of the successors of the `ℓ̄`
/// nearest windows, or 0 while `n ≤ k + ℓ̄ + 1`.
pub fn elementary_predict(prefix: &[f64], key: ExpertKey, tau: QuantileLevel) -> f64 {
    let n = prefix.len() + 1;
    if !is_active(n, key.k, key.lbar) {
        return 0.0;
    }
    let ranked = naive_ranked(prefix, key.k, key.lbar);
    let succ: Vec<f64> = successors(prefix, &ranked).collect();
    empirical_quantile(&succ, tau).unwrap_or(0.0)
}

/// Mean of the successors of the `ℓ̄` nearest windows, or 0 in the
/// degenerate branch.
pub fn elementary_mean(prefix: &[f64], key: ExpertKey) -> f64 {
    let n = prefix.len() + 1;
    if !is_active(n, key.k, key.lbar) {
        return 0.0;
    }
    let ranked = naive_ranked(prefix, key.k, key.lbar);
    let sum: f64 = successors(prefix, &ranked).sum();
    sum / ranked.len() as f64
}

/// Clamps an expert output to `[-a, a]`, `a = min(n^δ, cap(key))`, when the
/// policy is on.
pub fn truncate_prediction(value: f64, n: usize, key: ExpertKey, policy: &TruncationPolicy) -> f64 {
    match *policy {
        TruncationPolicy::Off => value,
        TruncationPolicy::On { delta, cap } => {
            let a = libm::pow(n as f64, delta).min(cap.cap(key));
            truncate(value, a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::CapRule;
    use alloc::vec;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn key(k: usize, lbar: usize) -> ExpertKey {
        ExpertKey { k, lbar }
    }

    #[test]
    fn window_distance_examples() {
        let s = [1.0, 2.0, 1.0, 2.0];
        assert_eq!(window_distance(&s, 2, 4, 1).unwrap(), 0.0);
        assert_eq!(window_distance(&s, 3, 4, 1).unwrap(), 1.0);
        let s = [0.0, 0.0, 3.0, 4.0, 0.0, 0.0];
        assert_eq!(window_distance(&s, 3, 5, 2).unwrap(), 5.0);
        assert!(matches!(
            window_distance(&s, 2, 5, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(window_distance(&s, 3, 8, 2).is_err());
    }

    #[test]
    fn neighbor_set_examples() {
        let prefix = [1.0, 2.0, 1.0, 2.0, 9.0, 2.0];
        assert_eq!(neighbor_set(&prefix, 1, 2).unwrap().indices, vec![3, 5]);
        assert_eq!(neighbor_set(&prefix, 1, 1).unwrap().indices, vec![3]);
        let set = neighbor_set(&[1.0, 2.0], 1, 5).unwrap();
        assert_eq!(set.indices, vec![2]);
        assert_eq!(set.distances, vec![1.0]);
        assert_eq!(
            neighbor_set(&[1.0], 1, 1),
            Err(Error::NoCandidates { n: 2, k: 1 })
        );
    }

    #[test]
    fn elementary_examples() {
        let half = QuantileLevel::parse("0.5").unwrap();
        let prefix = [1.0, 2.0, 1.0, 2.0, 9.0, 2.0];
        assert_eq!(elementary_predict(&prefix, key(1, 2), half), 1.0);
        assert_eq!(elementary_predict(&[1.0, 2.0], key(1, 1), half), 0.0);
        let constant = vec![4.5; 40];
        for k in 1..4 {
            for l in 1..6 {
                assert_eq!(elementary_predict(&constant, key(k, l), half), 4.5);
            }
        }
        assert_eq!(elementary_mean(&prefix, key(1, 2)), 5.0);
    }

    #[test]
    fn truncation_examples() {
        let off = TruncationPolicy::Off;
        assert_eq!(truncate_prediction(100.0, 7, key(1, 1), &off), 100.0);
        let on = TruncationPolicy::On {
            delta: 0.2,
            cap: CapRule::Fixed(10.0),
        };
        assert_eq!(truncate_prediction(100.0, 1024, key(1, 1), &on), 4.0);
        let on = TruncationPolicy::On {
            delta: 0.2,
            cap: CapRule::Fixed(2.0),
        };
        assert_eq!(truncate_prediction(-100.0, 1024, key(1, 1), &on), -2.0);
        let by_index = TruncationPolicy::on(0.2).unwrap();
        assert_eq!(truncate_prediction(100.0, 1024, key(3, 3), &by_index), 3.0);
    }

    fn random_series(rng: &mut ChaCha8Rng, len: usize, levels: u32) -> Vec<f64> {
        (0..len)
            .map(|_| (rng.next_u32() % levels) as f64 * 0.37 - 3.0)
            .collect()
    }

    #[test]
    fn engines_agree_on_every_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            // few distinct levels force plenty of exact ties
            let levels = if trial % 2 == 0 { 5 } else { 1 << 20 };
            let series = random_series(&mut rng, 60, levels);
            let k = 1 + trial % 4;
            let count = 1 + trial % 9;
            let mut naive = NeighborSearch::new(k, DistanceEngine::Naive);
            let mut incr = NeighborSearch::new(k, DistanceEngine::Incremental);
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for n in 1..=series.len() + 1 {
                let prefix = &series[..n - 1];
                naive.ranked(prefix, count, &mut a);
                incr.ranked(prefix, count, &mut b);
                assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    assert_eq!(x.0, y.0);
                    assert_eq!(x.1.to_bits(), y.1.to_bits());
                }
            }
        }
    }

    #[test]
    fn incremental_survives_spikes_and_rewinds() {
        let mut series: Vec<f64> = (0..300).map(|i| libm::sin(i as f64 * 0.3)).collect();
        series[120] = 1e9;
        series[121] = -1e9;
        let mut naive = NeighborSearch::new(3, DistanceEngine::Naive);
        let mut incr = NeighborSearch::new(3, DistanceEngine::Incremental);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let steps: Vec<usize> = (1..=301).chain([50, 51, 52, 200, 10, 301]).collect();
        for n in steps {
            naive.ranked(&series[..n - 1], 7, &mut a);
            incr.ranked(&series[..n - 1], 7, &mut b);
            assert_eq!(a, b, "n={n}");
        }
    }

    #[test]
    fn neighbor_set_size_and_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let series = random_series(&mut rng, 40, 1000);
        for n in 3..=41 {
            for k in 1..4 {
                for lbar in 1..8 {
                    let prefix = &series[..n - 1];
                    match neighbor_set(prefix, k, lbar) {
                        Ok(set) => {
                            assert_eq!(set.indices.len(), lbar.min(n - k - 1));
                            assert!(set.indices.windows(2).all(|w| w[0] < w[1]));
                            assert!(set.indices.iter().all(|&t| k < t && t < n));
                        }
                        Err(_) => assert!(n < k + 2),
                    }
                }
            }
        }
    }
}
