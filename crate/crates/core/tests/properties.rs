use nnquant_core::aggregator::{compute_weights, run_sequence};
use nnquant_core::knn::{elementary_predict, neighbor_set, truncate_prediction};
use nnquant_core::pinball::{empirical_quantile, pinball_loss, pinball_risk, truncate};
use nnquant_core::synth::{generate, ProcessKind, ProcessSpec};
use nnquant_core::{
    CapRule, EtaSchedule, ExpertGrid, ExpertKey, QuantileLevel, Series, TruncationPolicy,
};
use proptest::prelude::*;

fn level() -> impl Strategy<Value = QuantileLevel> {
    (1u64..100).prop_map(|p| QuantileLevel::from_ratio(p, 100).unwrap())
}

fn small_series(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((-40i32..40).prop_map(|v| v as f64 / 8.0), len)
}

proptest! {
    #[test]
    fn pinball_bounded_by_abs(x in -1e6f64..1e6, tau in level()) {
        prop_assert!(pinball_loss(x, tau) <= x.abs());
        prop_assert!(pinball_loss(x, tau) >= 0.0);
    }

    #[test]
    fn pinball_subadditive(x in -1e3f64..1e3, y in -1e3f64..1e3, tau in level()) {
        prop_assert!(pinball_loss(x + y, tau) <= pinball_loss(x, tau) + pinball_loss(y, tau) + 1e-9);
    }

    #[test]
    fn truncation_contracts(x in -1e3f64..1e3, y in -1e3f64..1e3, a in 0.01f64..100.0, tau in level()) {
        prop_assert!(pinball_loss(truncate(x, a) - truncate(y, a), tau) <= pinball_loss(x - y, tau) + 1e-12);
    }

    #[test]
    fn risk_is_midpoint_convex(
        sample in proptest::collection::vec(-100f64..100.0, 1..15),
        a in -150f64..150.0,
        b in -150f64..150.0,
        tau in level(),
    ) {
        let mid = pinball_risk(&sample, 0.5 * (a + b), tau).unwrap();
        let ends = 0.5 * (pinball_risk(&sample, a, tau).unwrap() + pinball_risk(&sample, b, tau).unwrap());
        prop_assert!(mid <= ends + 1e-9);
    }

    #[test]
    fn quantile_minimizes_risk(sample in proptest::collection::vec(-100f64..100.0, 1..13), tau in level()) {
        let q = empirical_quantile(&sample, tau).unwrap();
        prop_assert!(sample.contains(&q));
        let best = pinball_risk(&sample, q, tau).unwrap();
        for &c in &sample {
            prop_assert!(best <= pinball_risk(&sample, c, tau).unwrap() + 1e-9);
        }
    }

    #[test]
    fn expert_output_is_a_successor_or_zero(
        y in small_series(2..40),
        k in 1usize..4,
        lbar in 1usize..6,
        tau in level(),
    ) {
        let key = ExpertKey { k, lbar };
        let p = elementary_predict(&y, key, tau);
        let n = y.len() + 1;
        if n > k + lbar + 1 {
            let set = neighbor_set(&y, k, lbar).unwrap();
            prop_assert!(set.indices.iter().any(|&t| y[t - 1] == p));
        } else {
            prop_assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn expert_is_causal(
        y in small_series(2..40),
        future in small_series(1..10),
        k in 1usize..4,
        lbar in 1usize..6,
        tau in level(),
    ) {
        let key = ExpertKey { k, lbar };
        let cut = y.len();
        let mut longer = y.clone();
        longer.extend(future);
        prop_assert_eq!(elementary_predict(&y, key, tau), elementary_predict(&longer[..cut], key, tau));
    }

    #[test]
    fn expert_is_shift_equivariant(
        y in small_series(8..40),
        shift in (-64i32..64).prop_map(|c| c as f64 / 4.0),
        k in 1usize..3,
        lbar in 1usize..4,
        tau in level(),
    ) {
        // dyadic values keep the shifted distances exact
        let key = ExpertKey { k, lbar };
        let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
        if y.len() + 1 > k + lbar + 1 {
            prop_assert_eq!(elementary_predict(&shifted, key, tau), elementary_predict(&y, key, tau) + shift);
        }
    }

    #[test]
    fn truncated_outputs_respect_the_cap(v in -1e4f64..1e4, n in 1usize..5000, cap in 0.1f64..50.0) {
        let policy = TruncationPolicy::On { delta: 0.2, cap: CapRule::Fixed(cap) };
        let out = truncate_prediction(v, n, ExpertKey { k: 1, lbar: 1 }, &policy);
        prop_assert!(out.abs() <= (n as f64).powf(0.2).min(cap) + 1e-12);
    }

    #[test]
    fn weights_are_shift_invariant(
        raw in proptest::collection::vec(0f64..500.0, 1..20),
        shift in 0f64..1e4,
        eta in 0.01f64..2.0,
    ) {
        let prior = vec![1.0 / raw.len() as f64; raw.len()];
        let a = compute_weights(&prior, &raw, eta);
        let moved: Vec<f64> = raw.iter().map(|r| r + shift).collect();
        let b = compute_weights(&prior, &moved, eta);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn trajectories_are_probability_weighted_hull_points() {
    for seed in 0..5 {
        let spec = ProcessSpec::new(ProcessKind::Ar1 { phi: 0.4, sigma: 2.0 }, 200, seed).unwrap();
        let series = generate(&spec).unwrap();
        let grid = ExpertGrid::uniform(3, 5).unwrap();
        let tau = QuantileLevel::parse("0.75").unwrap();
        let run = run_sequence(&series, &grid, tau, EtaSchedule::default(), TruncationPolicy::Off).unwrap();
        for r in &run.records {
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(r.weights.iter().all(|w| (0.0..=1.0).contains(w)));
            let lo = r.expert_predictions.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = r.expert_predictions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo <= r.aggregate && r.aggregate <= hi);
        }
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let spec = ProcessSpec::new(ProcessKind::IidGaussian { mu: 10.0, sigma: 3.0 }, 300, 5).unwrap();
    let series: Series = generate(&spec).unwrap();
    let grid = ExpertGrid::uniform(4, 6).unwrap();
    let tau = QuantileLevel::parse("0.1").unwrap();
    let a = run_sequence(&series, &grid, tau, EtaSchedule::default(), TruncationPolicy::on(0.2).unwrap()).unwrap();
    let b = run_sequence(&series, &grid, tau, EtaSchedule::default(), TruncationPolicy::on(0.2).unwrap()).unwrap();
    assert_eq!(a, b);
}
