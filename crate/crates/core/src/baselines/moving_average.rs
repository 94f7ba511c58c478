use crate::error::{Error, Result};

/// Mean of the last `min(window, len)` observations.
pub fn ma_predict(prefix: &[f64], window: usize) -> Result<f64> {
    if prefix.is_empty() {
        return Err(Error::EmptyInput);
    }
    if window == 0 {
        return Err(Error::InvalidParameter("moving-average window must be positive"));
    }
    let tail = &prefix[prefix.len() - window.min(prefix.len())..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Mean of the last `window` observations at indices `t < n` with
/// `t ≡ n (mod period)`; `None` uses all of them.
pub fn dow_ma_predict(prefix: &[f64], period: usize, window: Option<usize>) -> Result<f64> {
    if period == 0 || window == Some(0) {
        return Err(Error::InvalidParameter("period and window must be positive"));
    }
    let n = prefix.len() + 1;
    if n <= period {
        return Err(Error::NoSameWeekdayHistory { n, period });
    }
    // same-position indices, newest first: n - period, n - 2·period, …
    let limit = window.unwrap_or(usize::MAX);
    let (sum, count) = (1..)
        .map(|j| n as isize - (j * period) as isize)
        .take_while(|&t| t >= 1)
        .take(limit)
        .fold((0.0, 0usize), |(s, c), t| (s + prefix[t as usize - 1], c + 1));
    Ok(sum / count as f64)
}
