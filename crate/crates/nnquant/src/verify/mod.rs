//! Acceptance checks. Each check is self-contained, seeded, and reports a
//! single pass/fail line with its measured runtime.

pub mod reference;

use std::fmt;
use std::time::{Duration, Instant};

use nnquant_core::aggregator::run_sequence;
use nnquant_core::baselines::{ar_fit, mem_run, qar_fit_irls, qar_objective, IrlsOptions, LinearModel};
use nnquant_core::eval::{backtest, ramp_metric, BacktestPlan, Method, MixtureConfig, PlanEntry};
use nnquant_core::pinball::{empirical_quantile, pinball_risk, truncate};
use nnquant_core::synth::{generate, gaussian_tau_quantile, lstar_oracle, ProcessKind, ProcessSpec, SeededRng};
use nnquant_core::{DistanceEngine, EtaSchedule, ExpertGrid, QuantileLevel, RunSummary, TruncationPolicy};

use reference::{reference_run, RefRule};

/// Identifiers of the available checks.
pub const ALL: [u8; 8] = [2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {}: {}: {} [{:.2}s of {}s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }
}

fn timed(
    id: u8,
    title: &'static str,
    limit_secs: u64,
    body: impl FnOnce() -> (bool, String),
) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_secs);
    Outcome {
        id,
        title,
        passed: ok && elapsed < limit,
        detail,
        elapsed,
        limit,
    }
}

pub fn run(id: u8) -> Option<Outcome> {
    Some(match id {
        2 => quantile_oracle(),
        3 => pinball_properties(),
        4 => regret_bound(),
        5 => consistency(),
        6 => ramp_calibration(),
        7 => qar_oracle(),
        8 => reference_equivalence(),
        9 => determinism(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<Outcome> {
    ALL.iter().filter_map(|&id| run(id)).collect()
}

fn level(s: &str) -> QuantileLevel {
    QuantileLevel::parse(s).expect("valid level literal")
}

const LEVELS: [&str; 5] = ["0.1", "0.25", "0.5", "0.75", "0.9"];

fn oracle_pinball(r: f64, tau: f64) -> f64 {
    if r > 0.0 {
        tau * r
    } else {
        (tau - 1.0) * r
    }
}

pub fn quantile_oracle() -> Outcome {
    timed(2, "sorted-sample quantile vs dense grid", 5, || {
        let mut violations = 0usize;
        let mut worst = f64::NEG_INFINITY;
        let mut evaluated = 0usize;
        for s in 0..1000u64 {
            let mut rng = SeededRng::new(0x5EED_0000 + s);
            let size = 1 + (s % 12) as usize;
            let sample: Vec<f64> = (0..size).map(|_| rng.standard_normal()).collect();
            let lo = sample.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
            let hi = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
            let steps = ((hi - lo) / 1e-3).ceil() as usize;
            for lit in LEVELS {
                let tau = level(lit);
                let t = tau.value();
                let q = empirical_quantile(&sample, tau).expect("nonempty");
                let at_q = pinball_risk(&sample, q, tau).expect("nonempty");
                for i in 0..=steps {
                    let g = lo + i as f64 * 1e-3;
                    let risk: f64 = sample.iter().map(|y| oracle_pinball(y - g, t)).sum();
                    worst = worst.max(at_q - risk);
                    if at_q > risk + 1e-12 {
                        violations += 1;
                    }
                    evaluated += 1;
                }
            }
        }
        (
            violations == 0,
            format!("{violations} violations over {evaluated} grid points, worst excess {worst:.3e}"),
        )
    })
}

pub fn pinball_properties() -> Outcome {
    timed(3, "pinball loss properties on a dyadic grid", 2, || {
        // every value is a small dyadic rational so the arithmetic is exact
        let mut rng = SeededRng::new(0x1E44A);
        let mut pick = |lo: i64, hi: i64| lo + (rng.next_u64() % (hi - lo + 1) as u64) as i64;
        let mut violations = [0usize; 3];
        let points = 100_000;
        for _ in 0..points {
            let x = pick(-640, 640) as f64 / 64.0;
            let y = pick(-640, 640) as f64 / 64.0;
            let num = pick(1, 63) as u64;
            let tau = QuantileLevel::from_ratio(num, 64).expect("level in (0,1)");
            let a = pick(1, 160) as f64 / 16.0;
            let rho = |r: f64| nnquant_core::pinball::pinball_loss(r, tau);
            if rho(x) > x.abs() {
                violations[0] += 1;
            }
            if rho(x + y) > rho(x) + rho(y) {
                violations[1] += 1;
            }
            if rho(truncate(x, a) - truncate(y, a)) > rho(x - y) {
                violations[2] += 1;
            }
        }
        (
            violations == [0, 0, 0],
            format!(
                "{points} points; violations: bound {}, subadditivity {}, truncation {}",
                violations[0], violations[1], violations[2]
            ),
        )
    })
}

fn mixed_process(i: u64, length: usize) -> ProcessSpec {
    let kind = match i % 3 {
        0 => ProcessKind::IidGaussian { mu: 0.5, sigma: 1.0 },
        1 => ProcessKind::Ar1 { phi: 0.6, sigma: 1.0 },
        _ => ProcessKind::Seasonal {
            period: 7,
            amplitudes: vec![1.0, 1.5, 1.2, 0.8, 0.9, -0.5, -1.0],
            sigma: 0.5,
        },
    };
    ProcessSpec::new(kind, length, 0xB0_0000 + i).expect("valid spec")
}

/// Right-hand side of the regret inequality, using per-step weights.
fn regret_rhs(summary: &RunSummary, y: &[f64], prior: &[f64], tau: QuantileLevel) -> f64 {
    let n = y.len() as f64;
    let eta_next = (1.0 / (n + 1.0)).sqrt();
    let best = summary
        .expert_average_loss
        .iter()
        .zip(prior)
        .map(|(l, b)| l - 2.0 * b.ln() / (n * eta_next))
        .fold(f64::INFINITY, f64::min);
    let t_val = tau.value();
    let mut quad = 0.0;
    for (t, rec) in summary.records.iter().enumerate() {
        let eta_t = (1.0 / (t as f64 + 1.0)).sqrt();
        let inner: f64 = rec
            .weights
            .iter()
            .zip(&rec.expert_predictions)
            .map(|(p, h)| {
                let l = oracle_pinball(y[t] - h, t_val);
                p * l * l
            })
            .sum();
        quad += eta_t * inner;
    }
    best + quad / (2.0 * n)
}

pub fn regret_bound() -> Outcome {
    timed(4, "regret inequality on 50 seeded runs", 60, || {
        let grid = ExpertGrid::uniform(4, 6).expect("grid");
        let mut failures = 0;
        let mut min_margin = f64::INFINITY;
        for i in 0..50u64 {
            let spec = mixed_process(i, 500);
            let series = generate(&spec).expect("series");
            let tau = level(LEVELS[(i % 5) as usize]);
            let summary = run_sequence(&series, &grid, tau, EtaSchedule::InverseSqrt, TruncationPolicy::Off)
                .expect("run");
            let rhs = regret_rhs(&summary, series.values(), grid.prior(), tau);
            let margin = rhs - summary.aggregate_average_loss;
            min_margin = min_margin.min(margin);
            if summary.aggregate_average_loss > rhs + 1e-9 {
                failures += 1;
            }
        }
        (failures == 0, format!("{failures}/50 runs violate; smallest margin {min_margin:.4}"))
    })
}

fn trailing_half<T: Copy>(v: &[T]) -> &[T] {
    &v[v.len() / 2..]
}

fn mixture_forecasts(series: &[f64], k_max: usize, lbar_max: usize, tau: QuantileLevel) -> Vec<f64> {
    nnquant_core::Aggregator::quantile(
        ExpertGrid::uniform(k_max, lbar_max).expect("grid"),
        tau,
        EtaSchedule::InverseSqrt,
        TruncationPolicy::Off,
    )
    .expect("aggregator")
    .forecasts(series)
    .expect("forecasts")
}

pub fn consistency() -> Outcome {
    timed(5, "trailing-half loss near the optimum", 300, || {
        let cases = [
            (ProcessKind::IidGaussian { mu: 0.0, sigma: 1.0 }, "0.5", 0.10),
            (ProcessKind::IidGaussian { mu: 0.0, sigma: 1.0 }, "0.9", 0.10),
            (ProcessKind::Ar1 { phi: 0.6, sigma: 1.0 }, "0.5", 0.15),
        ];
        let mut ok = true;
        let mut parts = Vec::new();
        for (i, (kind, lit, tol)) in cases.into_iter().enumerate() {
            let name = match kind {
                ProcessKind::IidGaussian { .. } => "iid",
                _ => "ar1",
            };
            let spec = ProcessSpec::new(kind, 5000, 0xC0_0000 + i as u64).expect("spec");
            let series = generate(&spec).expect("series");
            let tau = level(lit);
            let preds = mixture_forecasts(series.values(), 5, 15, tau);
            let y = trailing_half(series.values());
            let g = trailing_half(&preds);
            let loss = y
                .iter()
                .zip(g)
                .map(|(y, g)| oracle_pinball(y - g, tau.value()))
                .sum::<f64>()
                / y.len() as f64;
            let lstar = lstar_oracle(&spec, tau).expect("oracle");
            let rel = (loss - lstar).abs() / lstar;
            ok &= rel <= tol;
            parts.push(format!("{name} tau={lit}: {loss:.4} vs {lstar:.4} ({:+.1}%)", 100.0 * (loss - lstar) / lstar));
        }
        (ok, parts.join("; "))
    })
}

pub fn ramp_calibration() -> Outcome {
    timed(6, "trailing-half ramp near 1-tau", 300, || {
        let spec = ProcessSpec::new(ProcessKind::Ar1 { phi: 0.6, sigma: 1.0 }, 5000, 0xC0_0002).expect("spec");
        let series = generate(&spec).expect("series");
        let mut ok = true;
        let mut parts = Vec::new();
        for lit in ["0.1", "0.5", "0.9"] {
            let tau = level(lit);
            let preds = mixture_forecasts(series.values(), 5, 15, tau);
            let ramp = ramp_metric(trailing_half(&preds), trailing_half(series.values())).expect("ramp");
            let target = 1.0 - tau.value();
            ok &= (ramp - target).abs() <= 0.05;
            parts.push(format!("tau={lit}: {ramp:.4} (target {target:.2})"));
        }
        (ok, parts.join("; "))
    })
}

fn linear_ar1(n: usize, intercept: f64, slope: f64, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    let mut y = intercept / (1.0 - slope);
    (0..n)
        .map(|_| {
            y = intercept + slope * y + rng.standard_normal();
            y
        })
        .collect()
}

pub fn qar_oracle() -> Outcome {
    timed(7, "quantile autoregression by IRLS", 30, || {
        let mut ok = true;
        let mut parts = Vec::new();
        let long = linear_ar1(20_000, 2.0, 0.8, 0x0A_0001);
        // the population target at the median
        let tau = level("0.5");
        let fit = qar_fit_irls(&long, 1, tau, IrlsOptions::default()).expect("fit");
        let target = 2.0 + gaussian_tau_quantile(tau, 0.0, 1.0);
        let d_int = (fit.model.intercept - target).abs();
        let d_slope = (fit.model.coefficients[0] - 0.8).abs();
        ok &= d_int <= 0.1 && d_slope <= 0.05;
        parts.push(format!("n=20000 tau=0.5: |d intercept| {d_int:.4}, |d slope| {d_slope:.4}"));

        // in the upper tail the sampling spread of the intercept is close to
        // the tolerance, so the fit is checked against the exact sample
        // optimum: for a fixed slope the best intercept is a residual quantile
        let tau = level("0.9");
        let fit = qar_fit_irls(&long, 1, tau, IrlsOptions::default()).expect("fit");
        let b_fit = fit.model.coefficients[0];
        let mut profile_min = f64::INFINITY;
        let mut resid = Vec::with_capacity(long.len() - 1);
        for i in 0..=1000 {
            let b = b_fit - 0.01 + 0.02 * i as f64 / 1000.0;
            resid.clear();
            resid.extend(long.windows(2).map(|w| w[1] - b * w[0]));
            resid.sort_by(f64::total_cmp);
            let a = resid[(9 * resid.len()).div_ceil(10) - 1];
            profile_min = profile_min.min(resid.iter().map(|r| oracle_pinball(r - a, 0.9)).sum());
        }
        let gap = (fit.objective - profile_min) / profile_min;
        ok &= gap <= 1e-6;
        let target = 2.0 + gaussian_tau_quantile(tau, 0.0, 1.0);
        parts.push(format!(
            "n=20000 tau=0.9: objective gap to exact optimum {gap:+.1e} (intercept {:.4} vs population {target:.4})",
            fit.model.intercept
        ));

        let tau = level("0.5");
        let short = linear_ar1(60, 0.0, 0.5, 0x0A_0002);
        let fit = qar_fit_irls(&short, 1, tau, IrlsOptions::default()).expect("fit");
        let ols = ar_fit(&short, 1).expect("ols");
        let (a0, b0) = (ols.intercept, ols.coefficients[0]);
        let mut grid_min = f64::INFINITY;
        for i in 0..400 {
            let a = a0 - 1.0 + 2.0 * i as f64 / 399.0;
            for j in 0..400 {
                let b = b0 - 0.5 + 1.0 * j as f64 / 399.0;
                let obj: f64 = short.windows(2).map(|w| oracle_pinball(w[1] - a - b * w[0], 0.5)).sum();
                grid_min = grid_min.min(obj);
            }
        }
        let check = qar_objective(
            &short,
            &LinearModel {
                intercept: fit.model.intercept,
                coefficients: fit.model.coefficients.clone(),
            },
            tau,
        )
        .expect("objective");
        let excess = (fit.objective - grid_min) / grid_min;
        ok &= excess <= 1e-3 && (check - fit.objective).abs() <= 1e-9 * grid_min;
        parts.push(format!(
            "n=60: IRLS {:.6} vs grid {grid_min:.6} ({:+.4}%)",
            fit.objective,
            100.0 * excess
        ));
        (ok, parts.join("; "))
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn reference_equivalence() -> Outcome {
    timed(8, "library mixtures vs straight-line reference", 60, || {
        let mut worst = 0.0f64;
        for i in 0..20u64 {
            let mut rng = SeededRng::new(0x8E_F000 + i);
            let n = 60 + (rng.next_u64() % 141) as usize;
            let k_max = 1 + (rng.next_u64() % 4) as usize;
            let l_max = 1 + (rng.next_u64() % 5) as usize;
            let delta = (i % 4 == 3).then_some(TruncationPolicy::DEFAULT_DELTA);
            let spec = mixed_process(i, n);
            let series = generate(&spec).expect("series");
            let grid = ExpertGrid::uniform(k_max, l_max).expect("grid");
            let keys: Vec<(usize, usize)> = grid.keys().iter().map(|key| (key.k, key.lbar)).collect();
            let truncation = match delta {
                Some(d) => TruncationPolicy::on(d).expect("policy"),
                None => TruncationPolicy::Off,
            };
            let (summary, rule) = if i % 2 == 0 {
                let lit = LEVELS[(i / 2 % 5) as usize];
                let tau = level(lit);
                let num: u64 = lit[2..].parse().expect("digits");
                let den = 10u64.pow(lit.len() as u32 - 2);
                let s = run_sequence(&series, &grid, tau, EtaSchedule::InverseSqrt, truncation).expect("run");
                (s, RefRule::Quantile { num, den })
            } else {
                let s = mem_run(&series, &grid, EtaSchedule::InverseSqrt, truncation).expect("run");
                (s, RefRule::Mean)
            };
            let reference = reference_run(series.values(), &keys, grid.prior(), rule, delta);
            let aggregates: Vec<f64> = summary.records.iter().map(|r| r.aggregate).collect();
            worst = worst
                .max(max_abs_diff(&aggregates, &reference.aggregates))
                .max(max_abs_diff(&summary.expert_average_loss, &reference.expert_average_loss))
                .max((summary.aggregate_average_loss - reference.aggregate_average_loss).abs());
        }
        (worst <= 1e-10, format!("20 configurations, max deviation {worst:.3e}"))
    })
}

/// The synthetic call-volume panel: 21 weekly-seasonal series.
pub fn synthetic_panel(tau: QuantileLevel) -> BacktestPlan {
    let entries = (0..21u64)
        .map(|i| {
            let mut rng = SeededRng::new(0x9A_0000 + i);
            let base = 150.0 + 100.0 * rng.uniform();
            let amplitudes: Vec<f64> = (0..7)
                .map(|d| {
                    let weekend = if d >= 5 { 0.45 } else { 1.0 };
                    base * weekend * (0.9 + 0.2 * rng.uniform())
                })
                .collect();
            let length = 760 + ((i * 13) % 67) as usize;
            let spec = ProcessSpec::new(
                ProcessKind::Seasonal {
                    period: 7,
                    amplitudes,
                    sigma: 0.08 * base,
                },
                length,
                0x9B_0000 + i,
            )
            .expect("spec");
            let series = generate(&spec).expect("series");
            PlanEntry {
                id: format!("series{:02}", i + 1),
                dates: (length - 91..length).collect(),
                series,
            }
        })
        .collect();
    BacktestPlan::new(entries, tau).expect("plan")
}

pub fn determinism() -> Outcome {
    let plan = synthetic_panel(level("0.9"));
    let mut config = MixtureConfig::uniform(14, 25).expect("config");
    let incremental = Method::QuantileExpertMixture(config.clone());
    config.engine = DistanceEngine::Naive;
    let naive = Method::QuantileExpertMixture(config);
    let mut first_run = None;
    let mut outcome = timed(9, "full synthetic backtest", 60, || {
        let result = backtest(&plan, &incremental).expect("backtest");
        let bytes = serde_json::to_vec(&result).expect("json");
        first_run = Some((result, bytes));
        (true, String::new())
    });
    let (result, bytes) = first_run.expect("ran");
    let again = serde_json::to_vec(&backtest(&plan, &incremental).expect("backtest")).expect("json");
    let reference = backtest(&plan, &naive).expect("backtest");
    let cells = result.points.len();
    let mismatched = result
        .points
        .iter()
        .zip(&reference.points)
        .filter(|(a, b)| a.prediction.map(f64::to_bits) != b.prediction.map(f64::to_bits))
        .count()
        + cells.abs_diff(reference.points.len());
    let identical = bytes == again;
    outcome.passed &= identical && mismatched == 0 && result.report.excluded == 0;
    outcome.detail = format!(
        "{cells} cells, pinball {:.3}; reruns byte-identical: {identical}; engine mismatches: {mismatched}",
        result.report.pinball
    );
    outcome
}
