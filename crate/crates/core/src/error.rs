use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the forecasting core.
///
/// Indices carried by variants are 1-based, matching the series notation
/// used everywhere else in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("quantile level must lie strictly between 0 and 1, got {0}")]
    InvalidQuantileLevel(f64),
    #[error("invalid expert grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("sample is empty")]
    EmptySample,
    #[error("index out of range: t={t}, n={n}, k={k}")]
    IndexOutOfRange { t: usize, n: usize, k: usize },
    #[error("no candidate windows of length {k} before step {n}")]
    NoCandidates { n: usize, k: usize },
    #[error("update called before predict at step {0}")]
    PredictionMissing(usize),
    #[error("prefix has length {got}, expected {expected}")]
    PrefixLengthMismatch { expected: usize, got: usize },
    #[error("no history at the same position of a period-{period} cycle before step {n}")]
    NoSameWeekdayHistory { n: usize, period: usize },
    #[error("normal equations are singular")]
    RankDeficient,
    #[error("expected {expected} lagged values, got {got}")]
    WrongLagCount { expected: usize, got: usize },
    #[error("series of length {got} is too short, need at least {needed}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("length mismatch: {left} predictions vs {right} observations")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("operation not supported for this process kind")]
    UnsupportedSpec,
}
