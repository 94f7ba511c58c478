//! Domain types shared by every module.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A finite, non-empty sequence of real observations `y_1, …, y_n`.
///
/// Positions are 1-based in every public API that takes an index; the
/// backing slice is 0-based as usual.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Series(Vec<f64>);

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i + 1));
        }
        Ok(Series(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Observation `y_t` for 1-based `t`.
    pub fn get(&self, t: usize) -> Option<f64> {
        t.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    /// The prefix `y_1^m`.
    pub fn prefix(&self, m: usize) -> &[f64] {
        &self.0[..m.min(self.0.len())]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Series {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Checks that `raw` is non-empty and entirely finite.
pub fn validate_series(raw: &[f64]) -> Result<Series> {
    Series::new(raw.to_vec())
}

/// A quantile level `τ ∈ (0, 1)`.
///
/// When built from a decimal string or a ratio the level also remembers its
/// exact rational value, so that the test "is `m·τ` an integer" is decided
/// exactly instead of through floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileLevel {
    tau: f64,
    exact: Option<(u64, u64)>,
}

impl QuantileLevel {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidQuantileLevel(tau));
        }
        Ok(Self { tau, exact: None })
    }

    /// `τ = num / den`.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 || num >= den {
            return Err(Error::InvalidQuantileLevel(if den == 0 {
                f64::NAN
            } else {
                num as f64 / den as f64
            }));
        }
        Ok(Self {
            tau: num as f64 / den as f64,
            exact: Some((num, den)),
        })
    }

    /// Parses a level such as `"0.9"`. Plain decimal notation keeps the
    /// exact rational; anything else `f64` understands is accepted without it.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let digits = s.strip_prefix("0.").or_else(|| s.strip_prefix('.'));
        if let Some(frac) = digits {
            let frac = frac.trim_end_matches('0');
            if !frac.is_empty() && frac.len() <= 18 && frac.bytes().all(|b| b.is_ascii_digit()) {
                let num: u64 = frac.parse().map_err(|_| Error::InvalidQuantileLevel(f64::NAN))?;
                let den = 10u64.pow(frac.len() as u32);
                let tau: f64 = s.parse().map_err(|_| Error::InvalidQuantileLevel(f64::NAN))?;
                Self::new(tau)?;
                return Ok(Self {
                    tau,
                    exact: Some((num, den)),
                });
            }
        }
        let tau: f64 = s.parse().map_err(|_| Error::InvalidQuantileLevel(f64::NAN))?;
        Self::new(tau)
    }

    pub fn value(&self) -> f64 {
        self.tau
    }

    /// 1-based rank of the sorted-sample element that minimizes the pinball
    /// risk of a sample of size `m`: `m·τ` when that is an integer, else
    /// `⌈m·τ⌉`.
    pub fn rank(&self, m: usize) -> usize {
        debug_assert!(m > 0);
        let rank = match self.exact {
            Some((num, den)) => {
                let prod = m as u128 * num as u128;
                let den = den as u128;
                prod.div_ceil(den) as usize
            }
            None => {
                let r = m as f64 * self.tau;
                let nearest = libm::round(r);
                if (r - nearest).abs() < 1e-9 && nearest >= 1.0 {
                    nearest as usize
                } else {
                    libm::ceil(r) as usize
                }
            }
        };
        rank.clamp(1, m)
    }
}

impl fmt::Display for QuantileLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tau)
    }
}

impl TryFrom<f64> for QuantileLevel {
    type Error = Error;
    fn try_from(tau: f64) -> Result<Self> {
        Self::new(tau)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for QuantileLevel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.tau)
    }
}

/// Index `(k, ℓ̄)` of an elementary expert: window length and neighbor count.
///
/// In fractional neighbor mode `lbar` is the 1-based position in the list of
/// fractions rather than a count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExpertKey {
    pub k: usize,
    pub lbar: usize,
}

impl ExpertKey {
    pub fn new(k: usize, lbar: usize) -> Result<Self> {
        if k == 0 || lbar == 0 {
            return Err(Error::InvalidGrid("expert indices must be positive"));
        }
        Ok(Self { k, lbar })
    }
}

/// How an expert key turns into a neighbor count at step `n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum NeighborMode {
    /// `ℓ̄ = key.lbar`.
    FixedCount,
    /// `ℓ̄ = ⌊p_ℓ · n⌋` with `ℓ = key.lbar` indexing the fractions.
    Fractional(Vec<f64>),
}

/// A finite grid of experts with a prior over it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExpertGrid {
    keys: Vec<ExpertKey>,
    prior: Vec<f64>,
    mode: NeighborMode,
}

impl ExpertGrid {
    pub fn new(keys: Vec<ExpertKey>, prior: Vec<f64>, mode: NeighborMode) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::InvalidGrid("grid has no experts"));
        }
        if keys.len() != prior.len() {
            return Err(Error::InvalidGrid("prior length differs from key count"));
        }
        if keys.iter().any(|k| k.k == 0 || k.lbar == 0) {
            return Err(Error::InvalidGrid("expert indices must be positive"));
        }
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGrid("duplicate expert key"));
        }
        if prior.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidGrid("prior entries must be positive"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGrid("prior must sum to one"));
        }
        if let NeighborMode::Fractional(fractions) = &mode {
            if fractions.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                return Err(Error::InvalidGrid("neighbor fractions must lie in (0, 1)"));
            }
            if keys.iter().any(|k| k.lbar > fractions.len()) {
                return Err(Error::InvalidGrid("key refers to a missing neighbor fraction"));
            }
        }
        Ok(Self { keys, prior, mode })
    }

    /// `{1..k_max} × {1..lbar_max}` with the uniform prior, fixed-count mode.
    pub fn uniform(k_max: usize, lbar_max: usize) -> Result<Self> {
        if k_max == 0 || lbar_max == 0 {
            return Err(Error::InvalidGrid("grid dimensions must be positive"));
        }
        let size = k_max * lbar_max;
        let keys = (1..=k_max)
            .flat_map(|k| (1..=lbar_max).map(move |lbar| ExpertKey { k, lbar }))
            .collect();
        let prior = alloc::vec![1.0 / size as f64; size];
        Self::new(keys, prior, NeighborMode::FixedCount)
    }

    /// `{1..k_max} × fractions` with the uniform prior, fractional mode.
    pub fn uniform_fractional(k_max: usize, fractions: Vec<f64>) -> Result<Self> {
        if k_max == 0 || fractions.is_empty() {
            return Err(Error::InvalidGrid("grid dimensions must be positive"));
        }
        let size = k_max * fractions.len();
        let l_max = fractions.len();
        let keys = (1..=k_max)
            .flat_map(|k| (1..=l_max).map(move |lbar| ExpertKey { k, lbar }))
            .collect();
        let prior = alloc::vec![1.0 / size as f64; size];
        Self::new(keys, prior, NeighborMode::Fractional(fractions))
    }

    pub fn keys(&self) -> &[ExpertKey] {
        &self.keys
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn mode(&self) -> &NeighborMode {
        &self.mode
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Neighbor count used by `key` at step `n`.
    pub fn effective_lbar(&self, key: ExpertKey, n: usize) -> usize {
        match &self.mode {
            NeighborMode::FixedCount => key.lbar,
            NeighborMode::Fractional(p) => libm::floor(p[key.lbar - 1] * n as f64) as usize,
        }
    }
}

/// Learning-rate schedule `n ↦ η_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum EtaSchedule {
    /// `η_n = √(1/n)`.
    #[default]
    InverseSqrt,
    Constant(f64),
}

impl EtaSchedule {
    pub fn eta(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match *self {
            EtaSchedule::InverseSqrt => libm::sqrt(1.0 / n as f64),
            EtaSchedule::Constant(eta) => eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EtaSchedule::Constant(eta) if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::InvalidParameter("constant learning rate must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Bound paired with `n^δ` in the truncation level of an expert.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum CapRule {
    /// The expert's second index (`ℓ̄` in fixed-count mode, `ℓ` otherwise).
    #[default]
    NeighborIndex,
    Fixed(f64),
}

impl CapRule {
    pub fn cap(&self, key: ExpertKey) -> f64 {
        match *self {
            CapRule::NeighborIndex => key.lbar as f64,
            CapRule::Fixed(c) => c,
        }
    }
}

/// Clamping of expert outputs to `[-a, a]` with `a = min(n^δ, cap(key))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum TruncationPolicy {
    #[default]
    Off,
    On { delta: f64, cap: CapRule },
}

impl TruncationPolicy {
    pub const DEFAULT_DELTA: f64 = 0.2;

    pub fn on(delta: f64) -> Result<Self> {
        let policy = TruncationPolicy::On {
            delta,
            cap: CapRule::NeighborIndex,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TruncationPolicy::Off => Ok(()),
            TruncationPolicy::On { delta, cap } => {
                if !(delta > 0.0 && delta < 0.25) {
                    return Err(Error::InvalidParameter("truncation exponent must lie in (0, 1/4)"));
                }
                if let CapRule::Fixed(c) = cap {
                    if !(c > 0.0 && c.is_finite()) {
                        return Err(Error::InvalidParameter("truncation cap must be positive"));
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn validate_series_cases() {
        assert_eq!(validate_series(&[1.0, 2.0, 3.0]).unwrap().len(), 3);
        assert_eq!(validate_series(&[]), Err(Error::EmptySeries));
        assert_eq!(validate_series(&[1.0, f64::NAN]), Err(Error::NonFiniteValue(2)));
        assert_eq!(
            validate_series(&[f64::NEG_INFINITY]),
            Err(Error::NonFiniteValue(1))
        );
    }

    #[test]
    fn series_is_one_based() {
        let s = validate_series(&[4.0, 5.0]).unwrap();
        assert_eq!(s.get(0), None);
        assert_eq!(s.get(1), Some(4.0));
        assert_eq!(s.get(2), Some(5.0));
        assert_eq!(s.get(3), None);
    }

    #[test]
    fn uniform_grid_examples() {
        let g = ExpertGrid::uniform(14, 25).unwrap();
        assert_eq!(g.len(), 350);
        assert!(g.prior().iter().all(|&b| b == 1.0 / 350.0));

        let g = ExpertGrid::uniform(1, 1).unwrap();
        assert_eq!(g.keys(), &[ExpertKey { k: 1, lbar: 1 }]);
        assert_eq!(g.prior(), &[1.0]);

        let g = ExpertGrid::uniform(2, 3).unwrap();
        assert_eq!(g.len(), 6);
        assert!((g.prior().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_grid_prior_sums_to_one() {
        for k in 1..=100 {
            for l in 1..=100 {
                let g = ExpertGrid::uniform(k, l).unwrap();
                assert!((g.prior().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        let k = ExpertKey { k: 1, lbar: 1 };
        assert!(ExpertGrid::new(vec![k, k], vec![0.5, 0.5], NeighborMode::FixedCount).is_err());
        assert!(ExpertGrid::new(vec![k], vec![0.9], NeighborMode::FixedCount).is_err());
        assert!(ExpertGrid::new(vec![], vec![], NeighborMode::FixedCount).is_err());
        assert!(ExpertGrid::uniform(0, 3).is_err());
        assert!(ExpertGrid::uniform_fractional(2, vec![0.1, 1.5]).is_err());
    }

    #[test]
    fn fractional_lbar_is_floor() {
        let g = ExpertGrid::uniform_fractional(1, vec![0.1, 0.25]).unwrap();
        let keys = g.keys().to_vec();
        assert_eq!(g.effective_lbar(keys[0], 39), 3);
        assert_eq!(g.effective_lbar(keys[1], 39), 9);
        assert_eq!(g.effective_lbar(keys[0], 5), 0);
    }

    #[test]
    fn quantile_level_range() {
        assert!(QuantileLevel::new(0.0).is_err());
        assert!(QuantileLevel::new(1.0).is_err());
        assert!(QuantileLevel::new(1.5).is_err());
        assert!(QuantileLevel::new(f64::NAN).is_err());
        assert!(QuantileLevel::parse("1.5").is_err());
        assert!(QuantileLevel::parse("0.0").is_err());
        assert!(QuantileLevel::parse("abc").is_err());
        assert_eq!(QuantileLevel::parse("0.25").unwrap().value(), 0.25);
    }

    #[test]
    fn rank_rule() {
        let half = QuantileLevel::parse("0.5").unwrap();
        assert_eq!(half.rank(3), 2);
        assert_eq!(half.rank(10), 5);
        assert_eq!(half.rank(1), 1);
        let tenth = QuantileLevel::parse("0.1").unwrap();
        for m in 1..200 {
            let expected = if m % 10 == 0 { m / 10 } else { m / 10 + 1 };
            assert_eq!(tenth.rank(m), expected, "m={m}");
        }
        // the float fallback agrees with the exact path on these levels
        let float_tenth = QuantileLevel::new(0.1).unwrap();
        let float_seventh = QuantileLevel::new(0.7).unwrap();
        let seventh = QuantileLevel::from_ratio(7, 10).unwrap();
        for m in 1..200 {
            assert_eq!(float_tenth.rank(m), tenth.rank(m));
            assert_eq!(float_seventh.rank(m), seventh.rank(m));
        }
        assert_eq!(QuantileLevel::new(1e-12).unwrap().rank(5), 1);
    }

    #[test]
    fn eta_schedule() {
        let eta = EtaSchedule::default();
        assert_eq!(eta.eta(1), 1.0);
        assert_eq!(eta.eta(4), 0.5);
        assert!((1..1000).all(|n| eta.eta(n) > 0.0));
        assert!(EtaSchedule::Constant(0.0).validate().is_err());
    }

    #[test]
    fn truncation_delta_range() {
        assert!(TruncationPolicy::on(0.2).is_ok());
        assert!(TruncationPolicy::on(0.25).is_err());
        assert!(TruncationPolicy::on(0.0).is_err());
    }
}
