//! Straight-line reimplementations of the two expert mixtures, written
//! directly from the defining formulas with no shared code paths.
//!
//! Deliberate differences from the library: window sums run oldest lag
//! first, weights are not shifted before exponentiation, and the aggregate
//! is not clamped to the hull of the expert predictions.

/// Elementary forecaster family.
#[derive(Debug, Clone, Copy)]
pub enum RefRule {
    /// Pinball quantile at the rational level `num / den`.
    Quantile { num: u64, den: u64 },
    Mean,
}

#[derive(Debug, Clone)]
pub struct RefOutput {
    pub aggregates: Vec<f64>,
    pub expert_average_loss: Vec<f64>,
    pub aggregate_average_loss: f64,
}

fn loss(rule: RefRule, y: f64, h: f64) -> f64 {
    match rule {
        RefRule::Quantile { num, den } => {
            let tau = num as f64 / den as f64;
            let r = y - h;
            if r > 0.0 {
                tau * r
            } else {
                (tau - 1.0) * r
            }
        }
        RefRule::Mean => (y - h) * (y - h),
    }
}

/// Expert `(k, l)` at time `n` (1-based) given `y[0..n-1]`.
fn expert(y: &[f64], n: usize, k: usize, l: usize, rule: RefRule) -> f64 {
    if n <= k + l + 1 {
        return 0.0;
    }
    // candidates t = k+1 ..= n-1; window y_{t-k} .. y_{t-1}
    let mut cands: Vec<(f64, usize)> = Vec::new();
    for t in (k + 1)..n {
        let mut d = 0.0;
        for i in 0..k {
            let a = y[t - k + i - 1];
            let b = y[n - k + i - 1];
            d += (a - b) * (a - b);
        }
        cands.push((d, t));
    }
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut succ: Vec<f64> = cands[..l].iter().map(|&(_, t)| y[t - 1]).collect();
    match rule {
        RefRule::Quantile { num, den } => {
            succ.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let scaled = l as u64 * num;
            let rank = scaled.div_ceil(den).max(1) as usize;
            succ[rank - 1]
        }
        RefRule::Mean => succ.iter().sum::<f64>() / l as f64,
    }
}

/// Runs the mixture over `y` with keys `(k, l)`, prior `b`, learning rate
/// `1/√n`, and optional truncation to `±min(n^δ, l)`.
pub fn reference_run(
    y: &[f64],
    keys: &[(usize, usize)],
    prior: &[f64],
    rule: RefRule,
    delta: Option<f64>,
) -> RefOutput {
    let mut cum = vec![0.0; keys.len()];
    let mut aggregates = Vec::with_capacity(y.len());
    let mut agg_loss = 0.0;
    for n in 1..=y.len() {
        let eta = (1.0 / n as f64).sqrt();
        let preds: Vec<f64> = keys
            .iter()
            .map(|&(k, l)| {
                let h = expert(y, n, k, l, rule);
                match delta {
                    Some(d) => {
                        let a = (n as f64).powf(d).min(l as f64);
                        h.max(-a).min(a)
                    }
                    None => h,
                }
            })
            .collect();
        let w: Vec<f64> = prior
            .iter()
            .zip(&cum)
            .map(|(b, c)| b * (-eta * c).exp())
            .collect();
        let total: f64 = w.iter().sum();
        let g: f64 = w.iter().zip(&preds).map(|(wi, h)| wi * h).sum::<f64>() / total;
        let obs = y[n - 1];
        agg_loss += loss(rule, obs, g);
        for (c, h) in cum.iter_mut().zip(&preds) {
            *c += loss(rule, obs, *h);
        }
        aggregates.push(g);
    }
    let len = y.len() as f64;
    RefOutput {
        aggregates,
        expert_average_loss: cum.iter().map(|c| c / len).collect(),
        aggregate_average_loss: agg_loss / len,
    }
}
